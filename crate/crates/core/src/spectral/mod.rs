//! Reference spectra, band resampling, spectral-angle matching, calibration
//! refinement, and curve reconstruction from plotted figures.

pub mod calibration;
pub mod curve;
pub mod library;
pub mod sam;
pub mod trace;

pub use calibration::{fit_calibration, CalibrationAdjustment};
pub use curve::{resample_to_bands, BandSet, BandVector, SpectralCurve};
pub use library::{match_material, MaterialId, MaterialLibrary, MaterialRecord, ResampledLibrary};
pub use sam::spectral_angle;
pub use trace::{trace_curve, AxisCalibration, AxisScale, AxisTicks};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid spectral curve: {0}")]
    InvalidCurve(String),
    #[error("invalid band set: {0}")]
    InvalidBands(String),
    #[error("band {band} [{low}, {high}] nm does not overlap the curve [{curve_min}, {curve_max}] nm")]
    Coverage { band: usize, low: f64, high: f64, curve_min: f64, curve_max: f64 },
    #[error("spectral angle undefined for a zero vector")]
    ZeroVector,
    #[error("expected {expected} bands, got {actual}")]
    BandMismatch { expected: usize, actual: usize },
    #[error("material library is empty")]
    EmptyLibrary,
    #[error("material library: {0}")]
    Library(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("curve tracing: {0}")]
    Trace(String),
}
