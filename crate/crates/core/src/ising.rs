//! Coupled-mode Ising search.
//!
//! N resonator modes share the medium. After each mode's rotation and
//! projection the vertical fields are mixed by (I + κJ) inside the feedback
//! arm, then the common loss and phase are applied. Spins are read from the
//! helicity of each mode at steady state.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::atomic::Medium;
use crate::cavity::{projected_vertical, CavityError, CavityParams, ConvergenceMonitor};
use crate::noise::{complex_gaussian, rng_for, split_seed, SimRng};
use crate::polarization::PolarizationState;

/// Largest instance the exhaustive oracle accepts.
pub const MAX_BRUTE_FORCE_SPINS: usize = 24;

#[derive(Debug, Error)]
pub enum IsingError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coupling matrix is not square ({rows}×{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("coupling matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("coupling matrix has nonzero diagonal entry at {0}")]
    NonZeroDiagonal(usize),
    #[error("coupling entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
    #[error("coupling strength must be finite and non-negative, got {0}")]
    InvalidKappa(f64),
    #[error("spin values must be ±1, found {0}")]
    InvalidSpin(i8),
    #[error("problem has no spins")]
    Empty,
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("{0} spins exceed the enumeration limit of {MAX_BRUTE_FORCE_SPINS}")]
    TooLarge(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Cavity(#[from] CavityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    j: DMatrix<f64>,
    kappa: f64,
}

impl IsingProblem {
    pub fn new(j: DMatrix<f64>, kappa: f64) -> Result<Self, IsingError> {
        if !j.is_square() {
            return Err(IsingError::NotSquare {
                rows: j.nrows(),
                cols: j.ncols(),
            });
        }
        if j.nrows() == 0 {
            return Err(IsingError::Empty);
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(IsingError::InvalidKappa(kappa));
        }
        let n = j.nrows();
        for i in 0..n {
            if j[(i, i)] != 0.0 {
                return Err(IsingError::NonZeroDiagonal(i));
            }
            for k in (i + 1)..n {
                if !j[(i, k)].is_finite() {
                    return Err(IsingError::NonFinite(i, k));
                }
                if j[(i, k)] != j[(k, i)] {
                    return Err(IsingError::NotSymmetric(i, k));
                }
            }
        }
        Ok(Self { j, kappa })
    }

    /// Max-cut on weights `w` maps to couplings J = −w.
    pub fn from_max_cut(weights: DMatrix<f64>, kappa: f64) -> Result<Self, IsingError> {
        Self::new(-weights, kappa)
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self, IsingError> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(IsingError::InvalidKappa(kappa));
        }
        self.kappa = kappa;
        Ok(self)
    }

    fn mixing(&self) -> DMatrix<Complex64> {
        (DMatrix::identity(self.n(), self.n()) + &self.j * self.kappa)
            .map(|x| Complex64::new(x, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self, IsingError> {
        if let Some(&bad) = spins.iter().find(|s| s.abs() != 1) {
            return Err(IsingError::InvalidSpin(bad));
        }
        Ok(Self { spins })
    }

    /// Bit `n − 1 − i` of `mask` set means spin i is −1, so increasing masks
    /// walk configurations in lexicographic order with +1 before −1.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let spins = (0..n)
            .map(|i| if mask >> (n - 1 - i) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { spins }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }
}

impl std::fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.spins {
            f.write_char(if *s > 0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// E = −Σ_{i<k} J_ik s_i s_k.
pub fn ising_energy(problem: &IsingProblem, config: &SpinConfiguration) -> Result<f64, IsingError> {
    let n = problem.n();
    if config.len() != n {
        return Err(IsingError::DimensionMismatch {
            expected: n,
            found: config.len(),
        });
    }
    let s = config.spins();
    let mut e = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            e -= problem.j[(i, k)] * f64::from(s[i] * s[k]);
        }
    }
    Ok(e)
}

fn coupled_step(
    fields: &DVector<Complex64>,
    mixing: &DMatrix<Complex64>,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
) -> DVector<Complex64> {
    let projected = fields.map(|e_v| projected_vertical(e_v, pump, medium));
    (mixing * projected) * cav.feedback()
}

/// One pass of the coupled map. Every output mode has `E_H = pump`.
pub fn coupled_roundtrip(
    states: &[PolarizationState],
    problem: &IsingProblem,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
) -> Result<Vec<PolarizationState>, IsingError> {
    if states.len() != problem.n() {
        return Err(IsingError::DimensionMismatch {
            expected: problem.n(),
            found: states.len(),
        });
    }
    let fields = DVector::from_iterator(states.len(), states.iter().map(|s| s.e_v()));
    let next = coupled_step(&fields, &problem.mixing(), pump, cav, medium);
    Ok(next
        .iter()
        .map(|&e_v| PolarizationState::new(pump, e_v))
        .collect())
}

/// Independent circular Gaussian seeds for `n` modes.
pub fn initial_fields(n: usize, sigma: f64, rng: &mut SimRng) -> Vec<Complex64> {
    (0..n).map(|_| complex_gaussian(rng, sigma)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOutcome {
    pub fields: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterate the coupled map from explicit fields. Convergence uses the largest
/// per-mode step with the same rule as the single-mode runs.
pub fn run_coupled(
    problem: &IsingProblem,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    initial: &[Complex64],
) -> Result<CoupledOutcome, IsingError> {
    if initial.len() != problem.n() {
        return Err(IsingError::DimensionMismatch {
            expected: problem.n(),
            found: initial.len(),
        });
    }
    if !(pump > 0.0 && pump.is_finite()) {
        return Err(CavityError::InvalidPump(pump).into());
    }
    cav.validate()?;
    let mixing = problem.mixing();
    let mut monitor = ConvergenceMonitor::new(cav.conv_tol, cav.conv_window, true);
    let mut fields = DVector::from_column_slice(initial);
    for iter in 1..=cav.max_iters {
        let next = coupled_step(&fields, &mixing, pump, cav, medium);
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Ok(CoupledOutcome {
                fields: next.as_slice().to_vec(),
                iterations: iter,
                converged: false,
            });
        }
        let delta = (&next - &fields)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let scale = next.iter().map(|z| z.norm()).fold(pump, f64::max);
        fields = next;
        if monitor.push(delta, scale) {
            return Ok(CoupledOutcome {
                fields: fields.as_slice().to_vec(),
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(CoupledOutcome {
        fields: fields.as_slice().to_vec(),
        iterations: cav.max_iters,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub seed: u64,
    pub spins: SpinConfiguration,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Modes with |Im E_V| below `conv_tol`; read out as +1.
    pub undecided: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingSolution {
    pub best: SpinConfiguration,
    pub best_energy: f64,
    pub restarts: Vec<RestartRecord>,
}

impl IsingSolution {
    /// Fraction of restarts whose energy is within `tol` of `energy`.
    pub fn hit_rate(&self, energy: f64, tol: f64) -> f64 {
        let hits = self
            .restarts
            .iter()
            .filter(|r| (r.energy - energy).abs() <= tol)
            .count();
        hits as f64 / self.restarts.len() as f64
    }
}

/// Runs `restarts` coupled trajectories from noise seeds `seed + r` and keeps
/// the lowest energy, preferring the earliest restart on ties.
pub fn solve(
    problem: &IsingProblem,
    pump: f64,
    cav: &CavityParams,
    medium: &Medium,
    restarts: usize,
    seed: u64,
) -> Result<IsingSolution, IsingError> {
    if restarts == 0 {
        return Err(IsingError::NoRestarts);
    }
    let records = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let run_seed = split_seed(seed, r);
            let mut rng = rng_for(run_seed);
            let init = initial_fields(problem.n(), cav.noise_sigma, &mut rng);
            let out = run_coupled(problem, pump, cav, medium, &init)?;
            let spins = SpinConfiguration {
                spins: out
                    .fields
                    .iter()
                    .map(|z| if z.im < 0.0 { -1 } else { 1 })
                    .collect(),
            };
            let undecided = out
                .fields
                .iter()
                .filter(|z| z.im.abs() < cav.conv_tol)
                .count();
            Ok(RestartRecord {
                seed: run_seed,
                energy: ising_energy(problem, &spins)?,
                spins,
                iterations: out.iterations,
                converged: out.converged,
                undecided,
            })
        })
        .collect::<Result<Vec<_>, IsingError>>()?;
    let best = records.iter().fold(
        &records[0],
        |best, r| if r.energy < best.energy { r } else { best },
    );
    Ok(IsingSolution {
        best: best.spins.clone(),
        best_energy: best.energy,
        restarts: records,
    })
}

/// Exhaustive ground state. Configurations are visited in Gray-code order
/// with O(N) energy updates; among configurations tied within rounding the
/// lexicographically smallest (+1 < −1) wins, and its energy is recomputed
/// exactly before returning.
pub fn brute_force_ground_state(
    problem: &IsingProblem,
) -> Result<(SpinConfiguration, f64), IsingError> {
    let n = problem.n();
    if n > MAX_BRUTE_FORCE_SPINS {
        return Err(IsingError::TooLarge(n));
    }
    let j = &problem.j;
    let tie_tol = 1e-9 * (1.0 + j.iter().map(|x| x.abs()).sum::<f64>());
    let mut spins = vec![1.0_f64; n];
    let mut local: Vec<f64> = (0..n).map(|i| j.row(i).sum()).collect();
    let mut energy = -0.5 * local.iter().sum::<f64>();
    let (mut best_mask, mut best_energy) = (0_u64, energy);
    let mut mask = 0_u64;
    for step in 1..(1_u64 << n) {
        let bit = step.trailing_zeros() as usize;
        let i = n - 1 - bit;
        // flipping s_i changes E by 2 s_i h_i with h_i = Σ_k J_ik s_k
        energy += 2.0 * spins[i] * local[i];
        for (k, h) in local.iter_mut().enumerate() {
            *h -= 2.0 * spins[i] * j[(k, i)];
        }
        spins[i] = -spins[i];
        mask ^= 1 << bit;
        if energy < best_energy - tie_tol || (energy <= best_energy + tie_tol && mask < best_mask) {
            best_mask = mask;
            best_energy = energy;
        }
    }
    let config = SpinConfiguration::from_mask(n, best_mask);
    let exact = ising_energy(problem, &config)?;
    Ok((config, exact))
}

/// √η · max_i |1 + κ λ_i(J)|. When this exceeds one the linear mixing
/// alone can amplify, and trajectories may run away instead of settling.
pub fn loop_gain_bound(problem: &IsingProblem, eta: f64) -> f64 {
    let eig = problem.j.clone().symmetric_eigenvalues();
    eta.sqrt()
        * eig
            .iter()
            .map(|l| (1.0 + problem.kappa * l).abs())
            .fold(0.0, f64::max)
}

/// Edge-list text: the first line holds N, then one `i k J` line per edge
/// with 0-based indices. Blank lines and `#` comments are ignored.
pub fn parse_instance(text: &str) -> Result<DMatrix<f64>, IsingError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let parse_err = |line: usize, message: String| IsingError::Parse { line, message };
    let (first, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing spin count".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| parse_err(first, format!("expected spin count, found {header:?}")))?;
    if n == 0 {
        return Err(parse_err(first, "spin count must be positive".into()));
    }
    let mut j = DMatrix::zeros(n, n);
    let mut seen = vec![false; n * n];
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected `i k J`, found {content:?}"),
            ));
        }
        let index = |s: &str| -> Result<usize, IsingError> {
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(line, format!("bad index {s:?}")))?;
            if v >= n {
                return Err(parse_err(
                    line,
                    format!("index {v} out of range for {n} spins"),
                ));
            }
            Ok(v)
        };
        let (a, b) = (index(fields[0])?, index(fields[1])?);
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad coupling {:?}", fields[2])))?;
        if !w.is_finite() {
            return Err(parse_err(line, "coupling is not finite".into()));
        }
        if a == b {
            return Err(parse_err(line, format!("self-coupling on spin {a}")));
        }
        let key = a.min(b) * n + a.max(b);
        if seen[key] {
            return Err(parse_err(line, format!("duplicate edge ({a}, {b})")));
        }
        seen[key] = true;
        j[(a, b)] = w;
        j[(b, a)] = w;
    }
    Ok(j)
}

pub fn read_instance(path: &Path) -> Result<DMatrix<f64>, IsingError> {
    let text = std::fs::read_to_string(path).map_err(|source| IsingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Writes N followed by every nonzero upper-triangle edge.
pub fn format_instance(j: &DMatrix<f64>) -> String {
    let n = j.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for k in (i + 1)..n {
            if j[(i, k)] != 0.0 {
                let _ = writeln!(out, "{i} {k} {}", j[(i, k)]);
            }
        }
    }
    out
}
