use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("resonance tuple must have odd length 2σ+1, got {0}")]
    EvenTupleLength(usize),

    #[error("mode index {index} out of range for a set of {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state does not match mode set: {0}")]
    ModeSetMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("1/ε must be a positive integer, got ε = {0}")]
    NonIntegerInverseEps(f64),

    #[error("blow-up at t = {t}: |a| = {magnitude:e} exceeds guard {threshold:e}")]
    BlowUp { t: f64, magnitude: f64, threshold: f64 },

    #[error("non-finite value detected at t = {0}")]
    NonFinite(f64),

    #[error("carrier frequency {frequency} is not resolved by a grid of {n} points")]
    UnresolvedCarrier { frequency: i64, n: usize },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
