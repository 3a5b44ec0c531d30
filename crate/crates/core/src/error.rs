use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("Fock index {index} out of range (n_max = {n_max})")]
    FockOutOfRange { index: usize, n_max: usize },

    #[error("ion index {index} out of range (n_ions = {n_ions})")]
    IonOutOfRange { index: usize, n_ions: usize },

    #[error("expected {expected} per-ion labels, got {got}")]
    LabelCount { expected: usize, got: usize },

    #[error("unknown level label '{0}'")]
    UnknownLevel(String),

    #[error("unknown named state '{0}'")]
    UnknownState(String),

    #[error("unknown transition pair '{0}'")]
    UnknownPair(String),

    #[error("state is not normalized: |psi| = {0}")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix flagged hermitian deviates by {0:e}")]
    NotHermitian(f64),

    #[error("empty projector pattern")]
    EmptyPattern,

    #[error("invalid parameter '{name}': {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step {dt:e} s exceeds the resolution guard {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("norm drift {drift:e} at t = {t:e} s exceeds 1e-8")]
    NormDrift { drift: f64, t: f64 },

    #[error("out-of-range estimator input '{name}' = {value}")]
    EstimatorInput { name: &'static str, value: f64 },

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("config{}: '{key}': {reason}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, key: String, reason: String },

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
