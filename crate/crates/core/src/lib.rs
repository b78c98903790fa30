//! Polarization self-rotation oscillator: atomic response, polarimetry,
//! cavity iteration, helicity statistics and coupled-oscillator Ising search.

pub mod atomic;
pub mod cavity;
pub mod ising;
pub mod noise;
pub mod polarization;
pub mod stats;

pub use atomic::{AtomicError, AtomicParams, DensityMatrix4, DriveField, Medium, OpticalResponse};
pub use cavity::{CavityError, CavityParams, Helicity, LossSweepPoint, NoiseMode, RunRecord};
pub use ising::{IsingError, IsingProblem, IsingSolution, RestartRecord, SpinConfiguration};
pub use num_complex::Complex64;
pub use polarization::{IntensityRecord, PolarizationError, PolarizationState, Quadratures};
pub use stats::{HelicitySequence, StatsError};
