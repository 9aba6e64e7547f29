use thiserror::Error;

/// Errors raised by the solver, the verifiers and the scenario loader.
#[derive(Debug, Error)]
pub enum SddError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("anti-aliasing rule violated: n_grid = {n_grid} must be at least 2*m = {}", 2 * m)]
    AntiAliasing { n_grid: usize, m: usize },

    #[error("time {s} lies outside the history window [{start}, {end}]")]
    Window { s: f64, start: f64, end: f64 },

    #[error("kernel bump support [{lo}, {hi}] is not strictly inside (0, {length})")]
    SupportViolation { lo: f64, hi: f64, length: f64 },

    #[error("kernel quadrature under-resolved: doubling the resolution moved entries by {drift:e} (> 1e-6)")]
    UnderResolved { drift: f64 },

    #[error("initial function is not C1: {0}")]
    NotC1(String),

    #[error("fixed-point correction did not converge at t = {t} after {} iterations (trace {trace:?})", trace.len())]
    FixedPoint { t: f64, trace: Vec<f64> },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SddError>;
