use thiserror::Error;

/// Errors produced by synthesis, model, tracking and calibration code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("gate ramp of {ramp_samples} samples does not fit twice into {len} samples")]
    RampTooLong { ramp_samples: usize, len: usize },

    #[error("sample rate {from} Hz is not an integer multiple of {to} Hz")]
    NonIntegerDecimation { from: f64, to: f64 },

    #[error("component at {freq:.3} Hz is at or above Nyquist ({nyquist} Hz)")]
    AboveNyquist { freq: f64, nyquist: f64 },

    #[error("track left the safe level range at {level} dB SPL after {trials} trials")]
    LevelOutOfBounds { level: f64, trials: usize },

    #[error("staircase already terminated")]
    TrackTerminated,

    #[error(
        "target threshold {target:.2} dB SPL is below the noiseless floor of {floor:.2} dB SPL"
    )]
    TargetUnreachable { target: f64, floor: f64 },

    #[error("mismatched conditions: {0}")]
    MismatchedConditions(String),

    #[error("signal exceeds digital full scale (peak {peak:.4})")]
    Clipping { peak: f64 },

    #[error("malformed results: {0}")]
    MalformedResults(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
