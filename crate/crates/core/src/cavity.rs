//! Polarization-selective ring resonator.
//!
//! One roundtrip rotates the ellipse by the medium's self-rotation angle,
//! keeps only the vertical component, applies loss and phase, and re-injects
//! a fresh horizontal pump. The horizontal field is therefore always the pump
//! amplitude and only `E_V` carries state between passes.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::atomic::{golden_section_max, Medium};
use crate::noise::{complex_gaussian, rng_for, split_seed, SimRng};
use crate::polarization::{PolarizationError, PolarizationState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CavityError {
    #[error("roundtrip transmission must lie in (0, 1], got {0}")]
    InvalidEta(f64),
    #[error("invalid cavity parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("pump amplitude must be positive and finite, got {0}")]
    InvalidPump(f64),
    #[error("loss grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Only the initial vertical field is random.
    #[default]
    InitialSeed,
    /// Fresh Gaussian noise is also added to E_V after every roundtrip.
    PerPass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub eta: f64,
    pub psi: f64,
    pub noise_sigma: f64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub conv_window: usize,
    pub noise_mode: NoiseMode,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            eta: 0.9,
            psi: 0.0,
            noise_sigma: 1e-6,
            max_iters: 100_000,
            conv_tol: 1e-10,
            conv_window: 10,
            noise_mode: NoiseMode::InitialSeed,
        }
    }
}

impl CavityParams {
    pub fn new(eta: f64, psi: f64) -> Result<Self, CavityError> {
        let cav = Self {
            eta,
            psi,
            ..Self::default()
        };
        cav.validate()?;
        Ok(cav)
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_psi(mut self, psi: f64) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<(), CavityError> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(CavityError::InvalidEta(self.eta));
        }
        if !self.psi.is_finite() {
            return Err(CavityError::InvalidParameter {
                name: "psi",
                value: self.psi,
            });
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(CavityError::InvalidParameter {
                name: "noise_sigma",
                value: self.noise_sigma,
            });
        }
        if !(self.conv_tol > 0.0 && self.conv_tol.is_finite()) {
            return Err(CavityError::InvalidParameter {
                name: "conv_tol",
                value: self.conv_tol,
            });
        }
        if self.max_iters == 0 {
            return Err(CavityError::InvalidParameter {
                name: "max_iters",
                value: 0.0,
            });
        }
        if self.conv_window == 0 {
            return Err(CavityError::InvalidParameter {
                name: "conv_window",
                value: 0.0,
            });
        }
        Ok(())
    }

    pub(crate) fn feedback(&self) -> Complex64 {
        Complex64::from_polar(self.eta.sqrt(), self.psi)
    }
}

/// Rotation and PBS projection, before loss and phase. Shared with the
/// coupled-mode map, which mixes the projected fields before the feedback
/// factor is applied.
pub(crate) fn projected_vertical(e_v: Complex64, pump: f64, medium: &Medium) -> Complex64 {
    let power = pump * pump + e_v.norm_sqr();
    let eps = (pump * e_v.im / power).clamp(-1.0, 1.0).asin();
    let (s, c) = medium.rotation(eps).sin_cos();
    s * pump + c * e_v
}

fn step_vertical(e_v: Complex64, pump: f64, cav: &CavityParams, medium: &Medium) -> Complex64 {
    cav.feedback() * projected_vertical(e_v, pump, medium)
}

/// One pass of the resonator map. The returned state has `E_H = pump`.
pub fn roundtrip(
    state: &PolarizationState,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
) -> PolarizationState {
    PolarizationState::new(pump, step_vertical(state.e_v(), pump, cav, medium))
}

/// Sign of Im E_V at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Helicity {
    Minus,
    Zero,
    Plus,
}

impl Helicity {
    pub fn classify(e_v: Complex64, tol: f64) -> Self {
        if e_v.im.abs() < tol {
            Helicity::Zero
        } else if e_v.im > 0.0 {
            Helicity::Plus
        } else {
            Helicity::Minus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Helicity::Minus => -1,
            Helicity::Zero => 0,
            Helicity::Plus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub steady_state: PolarizationState,
    pub helicity: Helicity,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Convergence test on successive steps.
///
/// A step below `tol` is not enough on its own: near threshold the field
/// decays or grows by a factor close to one per pass, and a small step says
/// little about the distance to the fixed point. With the contraction
/// estimate q = (|Δₙ|/|Δₙ₋w|)^(1/w), the remaining distance is at most about
/// |Δₙ|·q/(1 − q), and that is required to be below `tol` as well.
pub(crate) struct ConvergenceMonitor {
    tol: f64,
    window: usize,
    contraction_check: bool,
    history: Vec<f64>,
    passes: usize,
}

impl ConvergenceMonitor {
    pub(crate) fn new(tol: f64, window: usize, contraction_check: bool) -> Self {
        Self {
            tol,
            window,
            contraction_check,
            history: Vec::with_capacity(window + 1),
            passes: 0,
        }
    }

    pub(crate) fn push(&mut self, delta: f64, scale: f64) -> bool {
        if self.history.len() == self.window + 1 {
            self.history.remove(0);
        }
        self.history.push(delta);
        let at_precision = delta <= 4.0 * f64::EPSILON * scale;
        let ok = at_precision
            || (delta < self.tol && (!self.contraction_check || self.remaining(delta) < self.tol));
        self.passes = if ok { self.passes + 1 } else { 0 };
        self.passes >= self.window
    }

    fn remaining(&self, delta: f64) -> f64 {
        if self.history.len() <= self.window {
            return f64::INFINITY;
        }
        let old = self.history[0];
        if old == 0.0 {
            return if delta == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let q = (delta / old).powf(1.0 / self.window as f64);
        if q >= 1.0 {
            f64::INFINITY
        } else {
            delta * q / (1.0 - q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub e_v: Complex64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterate the map from a given vertical field. `observer` sees every
/// iterate including the initial one. `rng` supplies per-pass noise and is
/// only drawn from in [`NoiseMode::PerPass`].
///
/// With persistent per-pass noise there is no fixed point to stop at, so that
/// mode always runs `max_iters` passes. `converged` then reports whether the
/// noiseless part of the last `conv_window` steps stayed below `conv_tol`,
/// which must sit above the noise floor.
pub fn run_from(
    e_v0: Complex64,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    mut rng: Option<&mut SimRng>,
    mut observer: impl FnMut(Complex64),
) -> RunOutcome {
    let per_pass = cav.noise_mode == NoiseMode::PerPass;
    let mut monitor = ConvergenceMonitor::new(cav.conv_tol, cav.conv_window, !per_pass);
    let mut e_v = e_v0;
    observer(e_v);
    for iter in 1..=cav.max_iters {
        let mapped = step_vertical(e_v, pump, cav, medium);
        if !(mapped.re.is_finite() && mapped.im.is_finite()) {
            return RunOutcome {
                e_v: mapped,
                iterations: iter,
                converged: false,
            };
        }
        let delta = (mapped - e_v).norm();
        let mut next = mapped;
        if per_pass {
            if let Some(rng) = rng.as_deref_mut() {
                next += complex_gaussian(rng, cav.noise_sigma);
            }
        }
        e_v = next;
        observer(e_v);
        let settled = monitor.push(delta, e_v.norm().max(pump));
        if settled && !per_pass {
            return RunOutcome {
                e_v,
                iterations: iter,
                converged: true,
            };
        }
    }
    RunOutcome {
        e_v,
        iterations: cav.max_iters,
        converged: per_pass && monitor.passes >= cav.conv_window,
    }
}

/// Seeds E_V with circular Gaussian noise of standard deviation
/// `noise_sigma` and iterates to a steady state. Deterministic in `seed`.
pub fn run_to_steady_state(
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    seed: u64,
) -> Result<RunRecord, CavityError> {
    if !(pump > 0.0 && pump.is_finite()) {
        return Err(CavityError::InvalidPump(pump));
    }
    cav.validate()?;
    let mut rng = rng_for(seed);
    let e_v0 = complex_gaussian(&mut rng, cav.noise_sigma);
    let out = run_from(e_v0, pump, cav, medium, Some(&mut rng), |_| {});
    Ok(record(out, pump, cav, seed))
}

/// Same as [`run_to_steady_state`] but from an explicit initial field.
pub fn run_seeded(
    e_v0: Complex64,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    seed: u64,
) -> Result<RunRecord, CavityError> {
    if !(pump > 0.0 && pump.is_finite()) {
        return Err(CavityError::InvalidPump(pump));
    }
    cav.validate()?;
    let mut rng = rng_for(seed);
    let out = run_from(e_v0, pump, cav, medium, Some(&mut rng), |_| {});
    Ok(record(out, pump, cav, seed))
}

fn record(out: RunOutcome, pump: f64, cav: &CavityParams, seed: u64) -> RunRecord {
    RunRecord {
        steady_state: PolarizationState::new(pump, out.e_v),
        helicity: Helicity::classify(out.e_v, cav.conv_tol),
        iterations: out.iterations,
        converged: out.converged,
        seed,
    }
}

/// `count` independent runs with seeds `seed + n`, returned in index order.
pub fn run_campaign(
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    count: usize,
    seed: u64,
) -> Result<Vec<RunRecord>, CavityError> {
    (0..count as u64)
        .into_par_iter()
        .map(|n| run_to_steady_state(pump, cav, medium, split_seed(seed, n)))
        .collect()
}

/// Small-field map on (Re E_V, Im E_V): √η R(ψ) [[1, gl], [0, 1]].
pub fn linear_transfer_matrix(gl: f64, eta: f64, psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    let shear = Matrix2::new(1.0, gl, 0.0, 1.0);
    Matrix2::new(c, -s, s, c) * shear * eta.sqrt()
}

pub fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Largest spectral radius over ψ, found numerically.
///
/// The radius itself is flat at √η wherever the eigenvalues are complex, which
/// for small gl is almost every phase. The determinant is η for all ψ, so
/// the radius only grows with |tr M|; the search therefore maximizes |tr M|
/// (coarse scan over one period, then golden section) and evaluates the
/// eigenvalues at the result.
pub fn max_spectral_radius(gl: f64, eta: f64) -> (f64, f64) {
    const COARSE: usize = 64;
    let trace = |psi: f64| linear_transfer_matrix(gl, eta, psi).trace().abs();
    let step = std::f64::consts::PI / COARSE as f64;
    let best = (0..COARSE)
        .map(|k| k as f64 * step)
        .max_by(|a, b| trace(*a).total_cmp(&trace(*b)))
        .unwrap_or(0.0);
    let psi = golden_section_max(trace, best - step, best + step, 1e-12);
    (psi, spectral_radius(&linear_transfer_matrix(gl, eta, psi)))
}

/// Closed-form threshold gain 1/√η − √η.
pub fn threshold_gain(eta: f64) -> Result<f64, CavityError> {
    check_eta(eta)?;
    let r = eta.sqrt();
    Ok(1.0 / r - r)
}

/// Transmission at which `gl` sits exactly at threshold: the positive root
/// of x² + gl·x − 1 = 0 in x = √η, squared.
pub fn threshold_transmission(gl: f64) -> f64 {
    let x = 2.0 / (gl + (gl * gl + 4.0).sqrt());
    x * x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCheck {
    pub above: bool,
    pub margin: f64,
}

pub fn threshold_check(gl: f64, eta: f64) -> Result<ThresholdCheck, CavityError> {
    let margin = gl - threshold_gain(eta)?;
    Ok(ThresholdCheck {
        above: margin > 0.0,
        margin,
    })
}

pub fn optimal_phase(gl: f64) -> f64 {
    (gl / 2.0).atan()
}

fn check_eta(eta: f64) -> Result<(), CavityError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(CavityError::InvalidEta(eta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSweepPoint {
    pub eta: f64,
    pub mean_re_ratio: f64,
    pub mean_im_ratio: f64,
    pub runs: usize,
    pub not_converged: usize,
    /// Runs that ended with a nonzero helicity.
    pub oscillating: usize,
}

/// Steady-state quadratures as a function of loss.
///
/// `template` supplies every cavity setting except η. Run `r` at grid index
/// `i` uses seed `seed + i·runs_per_point + r`. Quadratures are read back
/// through the intensity inversion and averaged as magnitudes, since the two
/// helicities would otherwise cancel.
pub fn sweep_loss(
    pump: f64,
    medium: &Medium,
    template: &CavityParams,
    eta_grid: &[f64],
    runs_per_point: usize,
    seed: u64,
) -> Result<Vec<LossSweepPoint>, CavityError> {
    if eta_grid.is_empty() {
        return Err(CavityError::EmptyGrid);
    }
    if runs_per_point == 0 {
        return Err(CavityError::InvalidParameter {
            name: "runs_per_point",
            value: 0.0,
        });
    }
    for &eta in eta_grid {
        check_eta(eta)?;
    }
    if !(pump > 0.0 && pump.is_finite()) {
        return Err(CavityError::InvalidPump(pump));
    }
    template.with_eta(1.0).validate()?;

    let jobs: Vec<(usize, u64)> = (0..eta_grid.len())
        .flat_map(|i| (0..runs_per_point).map(move |r| (i, (i * runs_per_point + r) as u64)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(i, offset)| {
            let cav = template.with_eta(eta_grid[i]);
            run_to_steady_state(pump, &cav, medium, split_seed(seed, offset))
        })
        .collect::<Result<Vec<_>, _>>()?;

    eta_grid
        .iter()
        .zip(records.chunks(runs_per_point))
        .map(|(&eta, chunk)| {
            let mut re = 0.0;
            let mut im = 0.0;
            for rec in chunk {
                let q = rec.steady_state.decompose().quadratures()?;
                re += q.re_ratio;
                im += q.im_ratio.abs();
            }
            let n = chunk.len() as f64;
            Ok(LossSweepPoint {
                eta,
                mean_re_ratio: re / n,
                mean_im_ratio: im / n,
                runs: chunk.len(),
                not_converged: chunk.iter().filter(|r| !r.converged).count(),
                oscillating: chunk
                    .iter()
                    .filter(|r| r.helicity != Helicity::Zero)
                    .count(),
            })
        })
        .collect()
}
