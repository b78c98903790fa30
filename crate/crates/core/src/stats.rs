//! Statistics of helicity sequences.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cavity::Helicity;
use crate::noise::{rng_for, split_seed};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("helicity values must be ±1, found {0}")]
    InvalidValue(i8),
    #[error("max lag {max_lag} must be smaller than the sequence length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("sequence is empty")]
    Empty,
}

/// Ordered ±1 outcomes. Runs that ended without a helicity are counted in
/// `zeros` and left out of `values`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelicitySequence {
    values: Vec<i8>,
    zeros: usize,
}

impl HelicitySequence {
    pub fn new(values: Vec<i8>) -> Result<Self, StatsError> {
        if let Some(&bad) = values.iter().find(|v| v.abs() != 1) {
            return Err(StatsError::InvalidValue(bad));
        }
        Ok(Self { values, zeros: 0 })
    }

    pub fn from_helicities(hs: impl IntoIterator<Item = Helicity>) -> Self {
        let mut values = Vec::new();
        let mut zeros = 0;
        for h in hs {
            match h {
                Helicity::Zero => zeros += 1,
                other => values.push(other.value()),
            }
        }
        Self { values, zeros }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros(&self) -> usize {
        self.zeros
    }

    pub fn reversed(&self) -> Self {
        Self {
            values: self.values.iter().rev().copied().collect(),
            zeros: self.zeros,
        }
    }
}

/// K(m) for m = 0..=max_lag, each lag averaged over its M − m valid pairs.
pub fn autocorrelation(seq: &HelicitySequence, max_lag: usize) -> Result<Vec<f64>, StatsError> {
    let s = seq.values();
    if max_lag >= s.len() {
        return Err(StatsError::LagTooLarge {
            max_lag,
            len: s.len(),
        });
    }
    Ok((0..=max_lag)
        .map(|m| {
            let sum: i64 = s.iter().zip(&s[m..]).map(|(a, b)| i64::from(a * b)).sum();
            sum as f64 / (s.len() - m) as f64
        })
        .collect())
}

/// Half-width `sigmas/√M` of the band expected for independent fair ±1 draws.
pub fn bernoulli_band(m: usize, sigmas: f64) -> f64 {
    sigmas / (m as f64).sqrt()
}

/// Fraction of +1 outcomes; `None` for an empty sequence.
pub fn bias(seq: &HelicitySequence) -> Option<f64> {
    if seq.is_empty() {
        return None;
    }
    let plus = seq.values().iter().filter(|&&v| v == 1).count();
    Some(plus as f64 / seq.len() as f64)
}

/// Fraction of lags 1..=K.len()−1 with |K(m)| ≤ band.
pub fn band_containment(k: &[f64], band: f64) -> f64 {
    if k.len() < 2 {
        return 1.0;
    }
    let inside = k[1..].iter().filter(|v| v.abs() <= band).count();
    inside as f64 / (k.len() - 1) as f64
}

/// Root-mean-square of K(m) over lags m ≥ 1.
pub fn lag_std(k: &[f64]) -> f64 {
    if k.len() < 2 {
        return 0.0;
    }
    (k[1..].iter().map(|v| v * v).sum::<f64>() / (k.len() - 1) as f64).sqrt()
}

/// Band behaviour of ideal independent fair coins, estimated by simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCalibration {
    pub trials: usize,
    /// Fraction of all (trial, lag) pairs inside the band.
    pub per_lag_containment: f64,
    /// Fraction of trials with every lag inside the band.
    pub all_lags_containment: f64,
    /// Empirical 1% quantile of the per-trial containment fraction.
    pub containment_q01: f64,
    /// Fraction of trials whose bias lies within `bias_sigmas` binomial
    /// standard deviations of one half.
    pub bias_containment: f64,
}

/// Monte Carlo reference for [`band_containment`] and [`bias`]. Trial `t`
/// draws its M coins from seed `seed + t`.
pub fn calibrate_bernoulli_band(
    m: usize,
    max_lag: usize,
    band_sigmas: f64,
    bias_sigmas: f64,
    trials: usize,
    seed: u64,
) -> Result<BandCalibration, StatsError> {
    if m == 0 || trials == 0 {
        return Err(StatsError::Empty);
    }
    if max_lag >= m {
        return Err(StatsError::LagTooLarge { max_lag, len: m });
    }
    let band = bernoulli_band(m, band_sigmas);
    let bias_half = bias_sigmas * 0.5 / (m as f64).sqrt();
    let per_trial: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(split_seed(seed, t));
            let values = (0..m)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let seq = HelicitySequence { values, zeros: 0 };
            let k = autocorrelation(&seq, max_lag).expect("lag checked above");
            let b = bias(&seq).expect("nonempty");
            (band_containment(&k, band), (b - 0.5).abs() <= bias_half)
        })
        .collect();
    let mut fractions: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    fractions.sort_by(f64::total_cmp);
    let n = trials as f64;
    Ok(BandCalibration {
        trials,
        per_lag_containment: fractions.iter().sum::<f64>() / n,
        all_lags_containment: fractions.iter().filter(|&&f| f == 1.0).count() as f64 / n,
        containment_q01: fractions[((trials - 1) as f64 * 0.01).floor() as usize],
        bias_containment: per_trial.iter().filter(|p| p.1).count() as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_non_unit_values() {
        assert_eq!(
            HelicitySequence::new(vec![1, 0, -1]),
            Err(StatsError::InvalidValue(0))
        );
    }

    #[test]
    fn zeros_are_counted_separately() {
        let seq = HelicitySequence::from_helicities([
            Helicity::Plus,
            Helicity::Zero,
            Helicity::Minus,
            Helicity::Zero,
        ]);
        assert_eq!(seq.values(), &[1, -1]);
        assert_eq!(seq.zeros(), 2);
    }

    #[test]
    fn lag_zero_is_one_and_constant_sequence_is_fully_correlated() {
        let seq = HelicitySequence::new(vec![1; 20]).unwrap();
        assert!(autocorrelation(&seq, 19).unwrap().iter().all(|&k| k == 1.0));
        let alt = HelicitySequence::new((0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())
            .unwrap();
        let k = autocorrelation(&alt, 3).unwrap();
        assert_eq!(k, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn lag_guard() {
        let seq = HelicitySequence::new(vec![1, -1]).unwrap();
        assert_eq!(
            autocorrelation(&seq, 2),
            Err(StatsError::LagTooLarge { max_lag: 2, len: 2 })
        );
    }

    #[test]
    fn band_values() {
        assert_abs_diff_eq!(
            bernoulli_band(700, 2.0),
            0.075_592_894_601_845_45,
            epsilon = 1e-15
        );
        assert_eq!(bernoulli_band(1, 3.0), 3.0);
        assert_eq!(bernoulli_band(10_000, 1.0), 0.01);
    }

    #[test]
    fn bias_values() {
        assert_eq!(bias(&HelicitySequence::new(vec![1; 5]).unwrap()), Some(1.0));
        let alt = HelicitySequence::new((0..8).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())
            .unwrap();
        assert_eq!(bias(&alt), Some(0.5));
        assert_eq!(bias(&HelicitySequence::new(vec![]).unwrap()), None);
    }

    #[test]
    fn containment_counts_positive_lags_only() {
        assert_eq!(band_containment(&[1.0, 0.05, -0.2, 0.0], 0.1), 2.0 / 3.0);
        assert_abs_diff_eq!(
            lag_std(&[1.0, 0.3, -0.4]),
            (0.125f64).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn calibration_is_reproducible() {
        let a = calibrate_bernoulli_band(200, 10, 3.0, 2.0, 50, 1).unwrap();
        let b = calibrate_bernoulli_band(200, 10, 3.0, 2.0, 50, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.per_lag_containment > 0.98);
    }
}
