//! Four-level X-system driven by two circular components.
//!
//! Level ordering used throughout: index 0 = |g, +1/2⟩, 1 = |e, −1/2⟩,
//! 2 = |g, −1/2⟩, 3 = |e, +1/2⟩. The right-circular drive Ω_R couples 0–1,
//! the left-circular drive Ω_L couples 2–3. `Γ` is the cross decay
//! (1 → 2, 3 → 0), `γ` the direct decay (1 → 0, 3 → 2).
//!
//! Rates share whatever unit `gamma_big` is given in, with ħ = 1.
//! Intensities enter only through the saturation ratio, fixed by
//! I/I_sat = 4|Ω|²/(Γ + γ)². The overall scale of the refractive indices
//! and of the self-rotation angle is absorbed into [`AtomicParams::gain_scale`].

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomicError {
    #[error("invalid atomic parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("drive field has a non-finite component")]
    NonFiniteDrive,
    #[error("intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),
    #[error("steady-state equations are rank deficient beyond the trace constraint")]
    SingularSystem,
    #[error("both circular drive components are zero")]
    ZeroField,
}

/// Decay rates, detuning and scale constants of the X-system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicParams {
    /// Cross decay rate Γ (e,−1/2 → g,−1/2 and e,+1/2 → g,+1/2).
    pub gamma_big: f64,
    /// Direct decay rate γ.
    pub gamma_small: f64,
    /// Laser detuning Δ, same units as the rates.
    pub detuning: f64,
    /// Transition dipole moment, used only to convert fields to Rabi frequencies.
    pub dipole: f64,
    /// Saturation intensity, in whatever intensity unit callers use.
    pub sat_intensity: f64,
    /// Dimensionless scale C absorbing number density, wavenumber and cell length.
    pub gain_scale: f64,
}

impl AtomicParams {
    pub fn new(
        gamma_big: f64,
        gamma_small: f64,
        detuning: f64,
        dipole: f64,
        sat_intensity: f64,
        gain_scale: f64,
    ) -> Result<Self, AtomicError> {
        let params = Self {
            gamma_big,
            gamma_small,
            detuning,
            dipole,
            sat_intensity,
            gain_scale,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters in linewidth units (Γ = 1, γ = 0, so Δ equals δ).
    pub fn from_detuning_ratio(delta: f64, gain_scale: f64) -> Result<Self, AtomicError> {
        Self::new(1.0, 0.0, delta, 1.0, 1.0, gain_scale)
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        let bad = |name, value| Err(AtomicError::InvalidParameter { name, value });
        if !(self.gamma_big.is_finite() && self.gamma_big > 0.0) {
            return bad("gamma_big", self.gamma_big);
        }
        if !(self.gamma_small.is_finite() && self.gamma_small >= 0.0) {
            return bad("gamma_small", self.gamma_small);
        }
        if !self.detuning.is_finite() {
            return bad("detuning", self.detuning);
        }
        if !(self.dipole.is_finite() && self.dipole > 0.0) {
            return bad("dipole", self.dipole);
        }
        if !(self.sat_intensity.is_finite() && self.sat_intensity > 0.0) {
            return bad("sat_intensity", self.sat_intensity);
        }
        if !self.gain_scale.is_finite() {
            return bad("gain_scale", self.gain_scale);
        }
        Ok(())
    }

    /// Total excited-state decay rate Γ + γ.
    pub fn linewidth(&self) -> f64 {
        self.gamma_big + self.gamma_small
    }

    /// δ = Δ / (Γ + γ).
    pub fn detuning_ratio(&self) -> f64 {
        self.detuning / self.linewidth()
    }

    /// Same rates, detuning moved so that Δ / (Γ + γ) equals `delta`.
    pub fn with_detuning_ratio(mut self, delta: f64) -> Self {
        self.detuning = delta * self.linewidth();
        self
    }

    pub fn with_gain_scale(mut self, gain_scale: f64) -> Self {
        self.gain_scale = gain_scale;
        self
    }
}

/// Complex Rabi frequencies of the two circular components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveField {
    pub omega_r: Complex64,
    pub omega_l: Complex64,
}

impl DriveField {
    pub fn new(omega_r: Complex64, omega_l: Complex64) -> Self {
        Self { omega_r, omega_l }
    }

    /// Rabi frequencies Ω = d·E from circular field amplitudes.
    pub fn from_fields(params: &AtomicParams, e_r: Complex64, e_l: Complex64) -> Self {
        Self::new(e_r * params.dipole, e_l * params.dipole)
    }

    /// Real Rabi frequencies reproducing the given circular intensities
    /// (same units as `params.sat_intensity`).
    pub fn from_intensities(
        params: &AtomicParams,
        i_r: f64,
        i_l: f64,
    ) -> Result<Self, AtomicError> {
        for i in [i_r, i_l] {
            if !(i >= 0.0 && i.is_finite()) {
                return Err(AtomicError::NegativeIntensity(i));
            }
        }
        let omega = |i: f64| 0.5 * params.linewidth() * (i / params.sat_intensity).sqrt();
        Ok(Self::new(
            Complex64::new(omega(i_r), 0.0),
            Complex64::new(omega(i_l), 0.0),
        ))
    }

    /// Elliptical drive of total intensity `intensity` and ellipticity `eps`.
    pub fn from_ellipticity(
        params: &AtomicParams,
        intensity: f64,
        eps: f64,
    ) -> Result<Self, AtomicError> {
        let (i_r, i_l) = circular_split(intensity, eps);
        Self::from_intensities(params, i_r, i_l)
    }

    /// (I_R / I_sat, I_L / I_sat).
    pub fn saturation_ratios(&self, params: &AtomicParams) -> (f64, f64) {
        let scale = 4.0 / (params.linewidth() * params.linewidth());
        (
            scale * self.omega_r.norm_sqr(),
            scale * self.omega_l.norm_sqr(),
        )
    }

    pub fn is_dark(&self) -> bool {
        self.omega_r == Complex64::ZERO && self.omega_l == Complex64::ZERO
    }

    fn is_finite(&self) -> bool {
        self.omega_r.is_finite() && self.omega_l.is_finite()
    }
}

/// Circular intensities (I_R, I_L) of light with total intensity `intensity`
/// and ellipticity `eps`. Positive ellipticity means left-circular dominance.
pub fn circular_split(intensity: f64, eps: f64) -> (f64, f64) {
    let s = (2.0 * eps).sin();
    (0.5 * intensity * (1.0 - s), 0.5 * intensity * (1.0 + s))
}

/// Steady-state density matrix of the X-system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4 {
    rho: Matrix4<Complex64>,
}

impl DensityMatrix4 {
    pub fn from_matrix(rho: Matrix4<Complex64>) -> Self {
        Self { rho }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    /// Element ρ_ij with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rho[(i, j)]
    }

    pub fn population(&self, i: usize) -> f64 {
        self.rho[(i, i)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DensityMatrix4 {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.rho[idx]
    }
}

/// Time derivative of ρ under the rotating-wave master equations.
///
/// The ten independent equations fill the diagonal and upper triangle; the
/// lower triangle is their Hermitian conjugate.
pub fn master_equation_rhs(
    params: &AtomicParams,
    drive: &DriveField,
    rho: &Matrix4<Complex64>,
) -> Matrix4<Complex64> {
    let i = Complex64::I;
    let (gb, gs, det) = (params.gamma_big, params.gamma_small, params.detuning);
    let gt = gb + gs;
    let (wr, wl) = (drive.omega_r, drive.omega_l);
    let r = |a: usize, b: usize| rho[(a, b)];
    let coherence_decay = Complex64::new(0.5 * gt, det);

    let d11 = r(3, 3) * gb + r(1, 1) * gs + i * wr * r(0, 1).conj() - i * wr.conj() * r(0, 1);
    let d22 = -r(1, 1) * gt - i * wr * r(0, 1).conj() + i * wr.conj() * r(0, 1);
    let d33 = r(1, 1) * gb + r(3, 3) * gs + i * wl * r(2, 3).conj() - i * wl.conj() * r(2, 3);
    let d44 = -r(3, 3) * gt - i * wl * r(2, 3).conj() + i * wl.conj() * r(2, 3);
    let d12 = -coherence_decay * r(0, 1) - i * wr * (r(0, 0) - r(1, 1));
    let d34 = -coherence_decay * r(2, 3) - i * wl * (r(2, 2) - r(3, 3));
    let d24 = i * wr.conj() * r(0, 3) - i * wl * r(1, 2);
    let d23 = i * det * r(1, 2) + i * wr.conj() * r(0, 2) - i * wl.conj() * r(1, 3);
    let d14 = -i * det * r(0, 3) + i * wr * r(1, 3) - i * wl * r(0, 2);
    let d13 = i * wr * r(1, 2) - i * wl.conj() * r(0, 3);

    let mut out = Matrix4::zeros();
    out[(0, 0)] = d11;
    out[(1, 1)] = d22;
    out[(2, 2)] = d33;
    out[(3, 3)] = d44;
    for (a, b, v) in [
        (0, 1, d12),
        (2, 3, d34),
        (1, 3, d24),
        (1, 2, d23),
        (0, 3, d14),
        (0, 2, d13),
    ] {
        out[(a, b)] = v;
        out[(b, a)] = v.conj();
    }
    out
}

// Unknowns of the optically driven block: four populations, then Re/Im of ρ12 and ρ34.
const OPTICAL_BLOCK: usize = 8;

fn optical_basis(k: usize) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    match k {
        0..=3 => m[(k, k)] = Complex64::ONE,
        4..=7 => {
            let (a, b) = if k < 6 { (0, 1) } else { (2, 3) };
            let v = if k % 2 == 0 {
                Complex64::ONE
            } else {
                Complex64::I
            };
            m[(a, b)] = v;
            m[(b, a)] = v.conj();
        }
        _ => unreachable!(),
    }
    m
}

fn optical_components(m: &Matrix4<Complex64>) -> SVector<f64, OPTICAL_BLOCK> {
    SVector::from([
        m[(0, 0)].re,
        m[(1, 1)].re,
        m[(2, 2)].re,
        m[(3, 3)].re,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(2, 3)].re,
        m[(2, 3)].im,
    ])
}

/// Stationary density matrix of the driven X-system.
///
/// The ground/excited cross coherences (ρ13, ρ14, ρ23, ρ24) obey a homogeneous
/// system decoupled from the rest and are set to zero; that block is singular
/// whenever |Ω_R| = |Ω_L|, and zero is the solution reached from any initial
/// state without such coherences. The remaining eight real unknowns are solved
/// with the first population equation replaced by Tr ρ = 1. With no drive at
/// all the populations are left split evenly between the two ground states.
pub fn steady_state(
    params: &AtomicParams,
    drive: &DriveField,
) -> Result<DensityMatrix4, AtomicError> {
    params.validate()?;
    if !drive.is_finite() {
        return Err(AtomicError::NonFiniteDrive);
    }
    if drive.is_dark() {
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(2, 2)] = Complex64::new(0.5, 0.0);
        return Ok(DensityMatrix4::from_matrix(rho));
    }

    let mut system = SMatrix::<f64, OPTICAL_BLOCK, OPTICAL_BLOCK>::zeros();
    for k in 0..OPTICAL_BLOCK {
        let column = optical_components(&master_equation_rhs(params, drive, &optical_basis(k)));
        system.set_column(k, &column);
    }
    for k in 0..OPTICAL_BLOCK {
        system[(0, k)] = if k < 4 { 1.0 } else { 0.0 };
    }

    let singular = system.singular_values();
    let (smax, smin) = (singular.max(), singular.min());
    if smin.is_nan() || smin <= 1e-13 * smax {
        return Err(AtomicError::SingularSystem);
    }
    let mut rhs = SVector::<f64, OPTICAL_BLOCK>::zeros();
    rhs[0] = 1.0;
    let x = system.lu().solve(&rhs).ok_or(AtomicError::SingularSystem)?;

    let mut rho = Matrix4::zeros();
    for (k, value) in x.iter().enumerate() {
        rho += optical_basis(k) * Complex64::new(*value, 0.0);
    }
    Ok(DensityMatrix4::from_matrix(rho))
}

/// Dispersion and absorption of the two circular components, up to the scale C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalResponse {
    pub n_r_minus_1: f64,
    pub n_l_minus_1: f64,
    /// Intensity-weighted absorption of the beam, same scale as the indices.
    pub absorption: f64,
}

/// Closed-form indices and absorption in terms of the saturation ratios
/// I_R / I_sat and I_L / I_sat.
pub fn closed_form_response(
    params: &AtomicParams,
    sat_r: f64,
    sat_l: f64,
) -> Result<OpticalResponse, AtomicError> {
    let parts = closed_form_components(params, sat_r, sat_l)?;
    Ok(OpticalResponse {
        n_r_minus_1: parts.n_r,
        n_l_minus_1: parts.n_l,
        absorption: (sat_r * parts.alpha_r + sat_l * parts.alpha_l) / (sat_r + sat_l),
    })
}

struct ComponentResponse {
    n_r: f64,
    n_l: f64,
    alpha_r: f64,
    alpha_l: f64,
}

fn closed_form_components(
    params: &AtomicParams,
    sat_r: f64,
    sat_l: f64,
) -> Result<ComponentResponse, AtomicError> {
    for s in [sat_r, sat_l] {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(AtomicError::NegativeIntensity(s));
        }
    }
    if sat_r + sat_l == 0.0 {
        return Err(AtomicError::ZeroField);
    }
    let c = params.gain_scale;
    let delta = params.detuning_ratio();
    let denom = (1.0 + 4.0 * delta * delta) * (sat_r + sat_l) + 4.0 * sat_r * sat_l;
    Ok(ComponentResponse {
        n_r: -c * delta * sat_l / denom,
        n_l: -c * delta * sat_r / denom,
        alpha_r: 0.5 * c * sat_l / denom,
        alpha_l: 0.5 * c * sat_r / denom,
    })
}

/// Refractive indices and absorption from the numerically solved steady state.
///
/// A component with exactly zero amplitude has no well-defined ratio ρ/Ω; its
/// index is the closed-form probe limit instead.
pub fn optical_response(
    params: &AtomicParams,
    drive: &DriveField,
) -> Result<OpticalResponse, AtomicError> {
    params.validate()?;
    if drive.is_dark() {
        return Err(AtomicError::ZeroField);
    }
    let rho = steady_state(params, drive)?;
    let (sat_r, sat_l) = drive.saturation_ratios(params);
    let closed = closed_form_components(params, sat_r, sat_l)?;

    // n − 1 = C (Γ+γ)/4 · Re(ρ_ge / Ω); absorption is the matching −Im part.
    let scale = params.gain_scale * params.linewidth() / 4.0;
    let component = |coherence: Complex64, omega: Complex64| {
        let ratio = coherence / omega;
        (scale * ratio.re, -scale * ratio.im)
    };
    let (n_r, alpha_r) = if drive.omega_r == Complex64::ZERO {
        (closed.n_r, closed.alpha_r)
    } else {
        component(rho.get(0, 1), drive.omega_r)
    };
    let (n_l, alpha_l) = if drive.omega_l == Complex64::ZERO {
        (closed.n_l, closed.alpha_l)
    } else {
        component(rho.get(2, 3), drive.omega_l)
    };

    Ok(OpticalResponse {
        n_r_minus_1: n_r,
        n_l_minus_1: n_l,
        absorption: (sat_r * alpha_r + sat_l * alpha_l) / (sat_r + sat_l),
    })
}

/// Rotation angle of the polarization ellipse after the cell, for light of
/// saturation ratio `intensity_ratio` and ellipticity `eps`.
pub fn self_rotation_angle(params: &AtomicParams, intensity_ratio: f64, eps: f64) -> f64 {
    debug_assert!(intensity_ratio >= 0.0);
    let delta = params.detuning_ratio();
    params.gain_scale * delta * (2.0 * eps).sin()
        / ((2.0 + 8.0 * delta * delta) + (1.0 + (4.0 * eps).cos()) * intensity_ratio)
}

/// Small-ellipticity slope gl = dφ/dε at ε = 0.
pub fn small_signal_gain(params: &AtomicParams, intensity_ratio: f64) -> f64 {
    debug_assert!(intensity_ratio >= 0.0);
    let delta = params.detuning_ratio();
    2.0 * params.gain_scale * delta / ((2.0 + 8.0 * delta * delta) + 2.0 * intensity_ratio)
}

/// Scale C giving slope `gl` at detuning ratio `delta` and saturation ratio `intensity_ratio`.
pub fn gain_scale_for(delta: f64, intensity_ratio: f64, gl: f64) -> Result<f64, AtomicError> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(AtomicError::InvalidParameter {
            name: "detuning_ratio",
            value: delta,
        });
    }
    if intensity_ratio.is_nan() || intensity_ratio < 0.0 {
        return Err(AtomicError::NegativeIntensity(intensity_ratio));
    }
    Ok(gl * ((2.0 + 8.0 * delta * delta) + 2.0 * intensity_ratio) / (2.0 * delta))
}

/// Ellipticity in [0, π/4] with the largest |φ|, by golden-section search.
pub fn peak_rotation(params: &AtomicParams, intensity_ratio: f64) -> (f64, f64) {
    let objective = |eps: f64| self_rotation_angle(params, intensity_ratio, eps).abs();
    let eps = golden_section_max(objective, 0.0, FRAC_PI_4, 1e-12);
    (eps, self_rotation_angle(params, intensity_ratio, eps))
}

pub(crate) fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    // The interior probes never reach the bracket ends; keep an endpoint if it is better.
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(mid)
}

/// The nonlinear medium as seen by the cavity: atomic parameters plus the
/// pump saturation ratio I / I_sat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub params: AtomicParams,
    pub intensity_ratio: f64,
}

impl Medium {
    pub fn new(params: AtomicParams, intensity_ratio: f64) -> Result<Self, AtomicError> {
        params.validate()?;
        if !(intensity_ratio >= 0.0 && intensity_ratio.is_finite()) {
            return Err(AtomicError::NegativeIntensity(intensity_ratio));
        }
        Ok(Self {
            params,
            intensity_ratio,
        })
    }

    /// Medium in linewidth units whose small-signal slope equals `gl`.
    pub fn with_gain(delta: f64, intensity_ratio: f64, gl: f64) -> Result<Self, AtomicError> {
        let c = gain_scale_for(delta, intensity_ratio, gl)?;
        Self::new(
            AtomicParams::from_detuning_ratio(delta, c)?,
            intensity_ratio,
        )
    }

    pub fn rotation(&self, eps: f64) -> f64 {
        self_rotation_angle(&self.params, self.intensity_ratio, eps)
    }

    pub fn gain(&self) -> f64 {
        small_signal_gain(&self.params, self.intensity_ratio)
    }
}
