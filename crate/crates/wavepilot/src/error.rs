use std::fmt;

/// Errors raised across the simulation stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dispersion solver failed to converge; carries the final residual.
    DispersionDiverged { omega: f64, depth: f64, residual: f64 },
    /// A parameter or configuration value violates its invariant.
    InvalidParameter(String),
    /// A query point lies outside the physical domain (e.g. below the seabed).
    OutOfDomain(String),
    /// A sample pushed into the elevation buffer breaks the uniform-Δt contract.
    NonUniformSample { expected: f64, got: f64 },
    /// Spectrum estimation retained no components above the thresholds.
    NoPredictableComponents,
    /// The predictable region is empty (band too wide for the given distance).
    EmptyPredictableRegion { t_s: f64, t_f: f64 },
    /// Time integration produced a non-finite state.
    NonFiniteState { t: f64, what: String },
    /// State estimator fault (singular innovation or non-finite propagation).
    EstimatorFault(String),
    /// NLP transcription was handed inconsistent horizon data.
    HorizonMismatch { horizon: usize, preview: usize },
    /// NLP solver failed in a way that yields no usable control.
    SolverFault(String),
    /// Configuration file problem.
    Config(String),
    /// File I/O while reading configs or writing mission artifacts.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DispersionDiverged { omega, depth, residual } => write!(
                f,
                "dispersion solve did not converge (omega = {omega} rad/s, depth = {depth} m, residual = {residual:e})"
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::OutOfDomain(msg) => write!(f, "out of domain: {msg}"),
            Error::NonUniformSample { expected, got } => write!(
                f,
                "non-uniform sample timestamp: expected {expected}, got {got}"
            ),
            Error::NoPredictableComponents => {
                write!(f, "no predictable components above thresholds")
            }
            Error::EmptyPredictableRegion { t_s, t_f } => write!(
                f,
                "prediction horizon empty (t_s = {t_s} >= t_f = {t_f}); band too wide for this distance"
            ),
            Error::NonFiniteState { t, what } => {
                write!(f, "non-finite state at t = {t}: {what}")
            }
            Error::EstimatorFault(msg) => write!(f, "estimator fault: {msg}"),
            Error::HorizonMismatch { horizon, preview } => write!(
                f,
                "preview shorter than horizon ({preview} < {horizon}); truncate the horizon first"
            ),
            Error::SolverFault(msg) => write!(f, "solver fault: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
