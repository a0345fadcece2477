use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),

    #[error("invalid integrator controls: {0}")]
    InvalidControls(String),

    #[error("radius {r} outside trajectory range [0, {r_end}]")]
    OutOfRange { r: f64, r_end: f64 },

    #[error("volume undefined: solution blows up at r* = {r_star}")]
    BlowUp { r_star: f64 },

    #[error("integration failed at r = {r}: step size underflow")]
    StepUnderflow { r: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bracketing failed: {message}")]
    Bracketing {
        message: String,
        /// Scanned `(path parameter, volume)` pairs.
        table: Vec<(f64, f64)>,
    },

    #[error("invalid tail at probe {param}: {message}")]
    InvalidTail { param: f64, message: String },

    #[error("threshold search failed: {0}")]
    SearchFailed(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
