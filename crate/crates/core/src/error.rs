use thiserror::Error;

/// Errors produced by the solvers, the constant evaluators and the monitors.
///
/// Divergence of a time integration is not an error: it is recorded on the
/// returned field instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("G saturates at {supremum:e}; cannot invert at t = {requested:e}")]
    Saturation { requested: f64, supremum: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("compatibility error: {}", .0.join("; "))]
    Compatibility(Vec<String>),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
