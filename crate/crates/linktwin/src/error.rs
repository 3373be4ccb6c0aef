//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulation, generation, training, and optimization.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or domain type failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An amplifier received no optical input power.
    #[error("no optical input")]
    NoOpticalInput,

    /// A numeric input was NaN or infinite where a finite value is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// Power-conversion-efficiency arithmetic was asked about a net-loss device.
    #[error("net-loss device: output {output_mw} mW < input {input_mw} mW")]
    NetLossDevice { input_mw: f64, output_mw: f64 },

    /// Calibration targets cannot be realized by any parameter set.
    #[error("infeasible calibration target: {0}")]
    InfeasibleCalibration(String),

    /// A profile with zero excursion cannot be rescaled to a positive excursion.
    #[error("zero excursion: constant profile cannot be rescaled to {target_db} dB")]
    ZeroExcursion { target_db: f64 },

    /// Relative entropy is undefined for non-positive probability mass.
    #[error("relative entropy undefined: transformed profile contains value <= 0")]
    KlUndefined,

    /// OSA-style SNR estimation found a slot power at or below the noise floor.
    #[error("non-positive signal in slot {slot}: slot power does not exceed interpolated noise")]
    NonPositiveSignal { slot: usize },

    /// Model training diverged or produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {detail}")]
    TrainingDiverged { epoch: usize, detail: String },

    /// A model file was malformed or does not match the expected architecture.
    #[error("model file rejected: {0}")]
    ModelRejected(String),

    /// A model was paired with a scenario it was not trained against.
    #[error("scenario fingerprint mismatch: model trained for {model}, requested {requested}")]
    FingerprintMismatch { model: String, requested: String },

    /// Optimization produced a non-finite capacity.
    #[error("non-finite capacity at iteration {iteration}")]
    NonFiniteCapacity { iteration: usize },

    /// File or serialization problem in a reader/writer.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV layer error.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON layer error.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// TOML parse error.
    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
