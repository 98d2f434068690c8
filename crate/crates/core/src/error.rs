use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid horizon: t0 = {t0} must be strictly less than tf = {tf}")]
    InvalidHorizon { t0: f64, tf: f64 },
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("control bound {index}: lower {lower} exceeds upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("problem has no dynamics")]
    MissingDynamics,
    #[error("problem must have at least one state and one control")]
    EmptyDimensions,
    #[error("problem is not in Mayer form (running cost present)")]
    NotMayer,
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("{what}: expected {expected} rows/values, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid tolerance: rtol = {rtol}, atol = {atol}")]
    InvalidTolerance { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown problem '{name}'; available problems: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },
    #[error("unknown parameter '{key}' for problem '{problem}'; known parameters: {}", known.join(", "))]
    UnknownParameter {
        problem: String,
        key: String,
        known: Vec<String>,
    },
    #[error("malformed override '{0}', expected key=value")]
    MalformedOverride(String),
    #[error("override '{key}': cannot parse '{value}' as a number")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("non-finite value encountered while evaluating {0}")]
    NonFinite(&'static str),
}
