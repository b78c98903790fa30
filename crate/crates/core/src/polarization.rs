//! Jones-vector states, intensity decompositions and the polarimetric
//! inversions used to read ellipse angle and quadratures back out of
//! measured intensities.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolarizationError {
    #[error("state has zero total power")]
    ZeroPower,
    #[error("ellipse angle undefined: intensities describe circular polarization")]
    UndefinedAngle,
    #[error("horizontal intensity is zero")]
    ZeroHorizontal,
    #[error("quadrature radicand {0} is negative beyond rounding")]
    NegativeRadicand(f64),
    #[error("|sin ε| must not exceed 1/2 for an ellipse with horizontal major axis, got ε = {0}")]
    EllipticityOutOfRange(f64),
}

pub type JonesMatrix = Matrix2<Complex64>;

/// Complex amplitudes (E_H, E_V).
///
/// States built with [`PolarizationState::new`] or [`PolarizationState::from_jones`]
/// carry a real, non-negative E_H. [`PolarizationState::rotate`] and
/// [`PolarizationState::apply`] return the raw transformed vector without
/// re-phasing, so E_H may pick up a phase there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    e_h: Complex64,
    e_v: Complex64,
}

impl PolarizationState {
    pub fn new(e_h: f64, e_v: Complex64) -> Self {
        if e_h < 0.0 {
            Self {
                e_h: Complex64::new(-e_h, 0.0),
                e_v: -e_v,
            }
        } else {
            Self {
                e_h: Complex64::new(e_h, 0.0),
                e_v,
            }
        }
    }

    /// Any Jones vector, re-phased so that E_H is real and non-negative.
    pub fn from_jones(e_h: Complex64, e_v: Complex64) -> Self {
        let norm = e_h.norm();
        if norm == 0.0 {
            return Self {
                e_h: Complex64::ZERO,
                e_v,
            };
        }
        let phase = e_h.conj() / norm;
        Self {
            e_h: Complex64::new(norm, 0.0),
            e_v: e_v * phase,
        }
    }

    pub fn horizontal(amplitude: f64) -> Self {
        Self::new(amplitude, Complex64::ZERO)
    }

    /// Linear polarization at `angle` from horizontal.
    pub fn linear(amplitude: f64, angle: f64) -> Self {
        Self::new(
            amplitude * angle.cos(),
            Complex64::new(amplitude * angle.sin(), 0.0),
        )
    }

    /// Ellipse with horizontal major axis whose ellipticity (as returned by
    /// [`ellipticity`](Self::ellipticity)) equals `eps`.
    pub fn with_ellipticity(amplitude: f64, eps: f64) -> Result<Self, PolarizationError> {
        let s = 2.0 * eps.sin();
        if s.abs() > 1.0 {
            return Err(PolarizationError::EllipticityOutOfRange(eps));
        }
        let a = 0.5 * s.asin();
        Ok(Self::new(
            amplitude * a.cos(),
            Complex64::new(0.0, amplitude * a.sin()),
        ))
    }

    pub fn e_h(&self) -> Complex64 {
        self.e_h
    }

    pub fn e_v(&self) -> Complex64 {
        self.e_v
    }

    pub fn power(&self) -> f64 {
        self.e_h.norm_sqr() + self.e_v.norm_sqr()
    }

    pub fn is_reference_phased(&self) -> bool {
        self.e_h.im == 0.0 && self.e_h.re >= 0.0
    }

    pub fn normalized(&self) -> Self {
        Self::from_jones(self.e_h, self.e_v)
    }

    /// ε = arcsin(E_H Im E_V / (|E_H|² + |E_V|²)), written phase-invariantly
    /// as Im(E_H* E_V) so it also holds for raw transformed vectors.
    pub fn ellipticity(&self) -> Result<f64, PolarizationError> {
        let power = self.power();
        if power == 0.0 {
            return Err(PolarizationError::ZeroPower);
        }
        Ok(((self.e_h.conj() * self.e_v).im / power)
            .clamp(-1.0, 1.0)
            .asin())
    }

    /// Intensities behind ideal analyzers in the canonical, diagonal and
    /// circular bases.
    pub fn decompose(&self) -> IntensityRecord {
        let (h, v) = (self.e_h, self.e_v);
        let i = Complex64::I;
        IntensityRecord {
            i_h: h.norm_sqr(),
            i_v: v.norm_sqr(),
            i_plus: 0.5 * (h + v).norm_sqr(),
            i_minus: 0.5 * (h - v).norm_sqr(),
            i_r: 0.5 * (h + i * v).norm_sqr(),
            i_l: 0.5 * (h - i * v).norm_sqr(),
        }
    }

    /// Rotate the field vector by `angle` (counter-clockwise from H toward V).
    pub fn rotate(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            e_h: self.e_h * c - self.e_v * s,
            e_v: self.e_h * s + self.e_v * c,
        }
    }

    pub fn apply(&self, m: &JonesMatrix) -> Self {
        let out = m * Vector2::new(self.e_h, self.e_v);
        Self {
            e_h: out[0],
            e_v: out[1],
        }
    }

    /// The same state with E_V replaced by −E_V (mirror helicity).
    pub fn mirrored(&self) -> Self {
        Self {
            e_h: self.e_h,
            e_v: -self.e_v,
        }
    }
}

pub fn rotation_matrix(angle: f64) -> JonesMatrix {
    let (s, c) = angle.sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Linear retarder with fast axis at `axis` and retardance `retardance`.
pub fn retarder(axis: f64, retardance: f64) -> JonesMatrix {
    let plate = Matrix2::new(
        Complex64::ONE,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::from_polar(1.0, retardance),
    );
    rotation_matrix(axis) * plate * rotation_matrix(-axis)
}

pub fn quarter_wave_plate(axis: f64) -> JonesMatrix {
    retarder(axis, std::f64::consts::FRAC_PI_2)
}

pub fn half_wave_plate(axis: f64) -> JonesMatrix {
    retarder(axis, std::f64::consts::PI)
}

/// Photodetector intensities of one state in three analyzer bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRecord {
    pub i_h: f64,
    pub i_v: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    pub i_r: f64,
    pub i_l: f64,
}

/// Vertical quadratures relative to the horizontal amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratures {
    /// |Re E_V| / E_H. The sign is not observable from intensities.
    pub re_ratio: f64,
    pub im_ratio: f64,
}

impl IntensityRecord {
    pub fn total_power(&self) -> f64 {
        self.i_h + self.i_v
    }

    /// Largest pairwise difference between the three basis power sums.
    pub fn basis_power_mismatch(&self) -> f64 {
        let sums = [
            self.i_h + self.i_v,
            self.i_plus + self.i_minus,
            self.i_r + self.i_l,
        ];
        let max = sums.iter().copied().fold(f64::MIN, f64::max);
        let min = sums.iter().copied().fold(f64::MAX, f64::min);
        max - min
    }

    /// Major-axis angle from horizontal, on (−π/2, π/2].
    ///
    /// Uses the two-argument arctangent so angles beyond ±π/4 come out in the
    /// right quadrant.
    pub fn ellipse_angle(&self) -> Result<f64, PolarizationError> {
        let num = self.i_plus - self.i_minus;
        let den = self.i_plus + self.i_minus - 2.0 * self.i_v;
        let scale = (self.i_plus + self.i_minus).max(f64::MIN_POSITIVE);
        if num.abs() <= 1e-12 * scale && den.abs() <= 1e-12 * scale {
            return Err(PolarizationError::UndefinedAngle);
        }
        let angle = 0.5 * num.atan2(den);
        // atan2 returns −π exactly for den < 0, num = −0.0; fold onto +π/2.
        Ok(if angle <= -std::f64::consts::FRAC_PI_2 {
            angle + std::f64::consts::PI
        } else {
            angle
        })
    }

    /// Im E_V / E_H = (I_L − I_R) / (2 I_H) and
    /// |Re E_V| / E_H = √(4 I_V I_H − (I_L − I_R)²) / (2 I_H).
    ///
    /// Radicands down to −1e−12 (relative to the squared total power) are
    /// treated as rounding and clamped to zero.
    pub fn quadratures(&self) -> Result<Quadratures, PolarizationError> {
        if self.i_h == 0.0 {
            return Err(PolarizationError::ZeroHorizontal);
        }
        let diff = self.i_l - self.i_r;
        let radicand = 4.0 * self.i_v * self.i_h - diff * diff;
        let floor = -1e-12 * self.total_power().powi(2).max(1.0);
        if radicand < floor {
            return Err(PolarizationError::NegativeRadicand(radicand));
        }
        Ok(Quadratures {
            re_ratio: radicand.max(0.0).sqrt() / (2.0 * self.i_h),
            im_ratio: diff / (2.0 * self.i_h),
        })
    }
}
