//! Simulator of radiation-pressure-induced correlations between two optical
//! beams reflected off a moving-mirror cavity.
//!
//! An intense signal beam carries a band-limited classical intensity noise
//! that drives the end mirror through radiation pressure; a weak meter beam
//! reads the resulting motion through its reflected phase. The crate
//! synthesizes the drive, thermal, and detection-floor noises as seeded
//! complex baseband envelopes, propagates them through the cavity and
//! mechanical transfer functions, emulates the synchronized dual-channel
//! I/Q acquisition, and estimates the intensity-phase correlations down to
//! the weak-drive regime where only ensemble averaging reveals them.
//!
//! Module map:
//! - [`physics`]: parameters and frequency-domain transfer functions,
//! - [`envelope`]: complex baseband records and FFT helpers,
//! - [`noise`]: seeded band-limited Gaussian synthesis,
//! - [`sim`]: one full acquisition run and seeded sweeps,
//! - [`estimators`]: correlation coefficient, conditional fluctuations,
//!   phase-space histograms, N-run averaging,
//! - [`io`]: CSV/JSON file formats for all of the above.

pub mod envelope;
pub mod estimators;
pub mod io;
pub mod noise;
pub mod physics;
pub mod sim;

pub use envelope::{ComplexEnvelope, Unit};
pub use estimators::{
    correlation_coefficient, conditional_fluctuations, histogram, sweep_correlation,
    AccumulationMode, CorrelationReport, HistogramGrid, PhaseSpaceHistogram, SweepTrace,
};
pub use noise::{
    gen_band_limited_gaussian, gen_drive_envelope, gen_shot_floor, gen_thermal_envelope,
    thermal_psd, NoiseSpec,
};
pub use physics::{
    intensity_reflection, phase_transfer, rad_thermal_ratio, radiation_displacement_transfer,
    susceptibility, BeamConfig, ExperimentParams, MechanicalOscillator, OpticalCavity,
};
pub use sim::{calibrate_meter, run_experiment, run_sweep, Calibration, RunRecord};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Physical or acquisition parameters violate an invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// A noise specification cannot be synthesized.
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),
    /// Input data is degenerate for the requested estimate
    /// (zero variance, empty or mismatched records).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// A file exists but does not parse as the expected format.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("csv: {other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
