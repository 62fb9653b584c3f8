//! Error type shared by every module of the toolkit.
//!
//! Each variant maps to a stable machine-readable code (see [`Error::code`])
//! that the CLI emits in its JSON error report and the C ABI maps to an
//! integer status.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All domain errors raised by the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An iterative numerical kernel did not converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// A dimension argument was zero or otherwise unusable.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    /// Operand shapes are incompatible.
    #[error("shape error: {0}")]
    ShapeError(String),
    /// A matrix that must be invertible is (numerically) singular.
    #[error("singular input: {0}")]
    SingularInput(String),
    /// A first-row/first-column entry vanishes, so the corresponding port phase is unconstrained.
    #[error("phase undefined at {side} port {port}")]
    PhaseUndefined { side: String, port: usize },
    /// A matrix required to be unitary violates the tolerance.
    #[error("matrix is not unitary (defect {defect:e} > tolerance {tolerance:e})")]
    NotUnitary { defect: f64, tolerance: f64 },
    /// Requested CSD partition does not satisfy 1 <= m <= n.
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    /// Matrix dimension does not equal n_s * n_p.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A decomposition plan is internally inconsistent.
    #[error("plan corrupt: {0}")]
    PlanCorrupt(String),
    /// A port index is out of range.
    #[error("port error: {0}")]
    PortError(String),
    /// Mode-matching parameter outside [0, 1].
    #[error("invalid gamma {0}")]
    InvalidGamma(f64),
    /// A ratio in the amplitude estimator has a zero count in its denominator.
    #[error("zero count in denominator at output {output}, input {input}, repetition {repetition}")]
    DivisionByZeroCount { output: usize, input: usize, repetition: usize },
    /// Curve fitting failed on every start.
    #[error("fit failure: {0}")]
    FitFailure(String),
    /// The calibrated mode-matching parameter fell outside [0, 1 + eps].
    #[error("calibration out of range: gamma = {0}")]
    CalibrationOutOfRange(f64),
    /// Coincidence curves required by the estimator are missing.
    #[error("insufficient data; required port tuples: {required:?}")]
    InsufficientData { required: Vec<[usize; 4]> },
    /// The amplitude matrix is singular (or too badly conditioned) to solve for dressings.
    #[error("degenerate amplitudes: {0}")]
    DegenerateAmplitudes(String),
    /// Too many bootstrap replicates failed.
    #[error("bootstrap unstable: {failures} of {replicates} replicates failed")]
    BootstrapUnstable { failures: usize, replicates: usize, log: Vec<String> },
    /// Malformed record in an input file.
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    /// Malformed fixture file.
    #[error("fixture error: {0}")]
    FixtureError(String),
    /// A state passed as highest-weight state is not annihilated by the raising operators.
    #[error("state is not a highest-weight state")]
    NotHighestWeight,
    /// Invariant that must hold by construction was violated (indicates a bug).
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    /// A canonical-state label is inconsistent.
    #[error("label error: {0}")]
    LabelError(String),
    /// Partitions of different sizes, or a non-partition.
    #[error("partition error: {0}")]
    PartitionError(String),
    /// Problem size above the supported limit.
    #[error("complexity limit: {0}")]
    ComplexityLimit(String),
    /// A non-principal submatrix identity is not in the shipped table.
    #[error("identity not tabulated: {0}")]
    NotTabulated(String),
    /// Generic invalid argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// File-system or serialization failure (CLI layer).
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::ShapeError(_) => "ShapeError",
            Error::SingularInput(_) => "SingularInput",
            Error::PhaseUndefined { .. } => "PhaseUndefined",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::InvalidSplit(_) => "InvalidSplit",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::PlanCorrupt(_) => "PlanCorrupt",
            Error::PortError(_) => "PortError",
            Error::InvalidGamma(_) => "InvalidGamma",
            Error::DivisionByZeroCount { .. } => "DivisionByZeroCount",
            Error::FitFailure(_) => "FitFailure",
            Error::CalibrationOutOfRange(_) => "CalibrationOutOfRange",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateAmplitudes(_) => "DegenerateAmplitudes",
            Error::BootstrapUnstable { .. } => "BootstrapUnstable",
            Error::ParseError { .. } => "ParseError",
            Error::FixtureError(_) => "FixtureError",
            Error::NotHighestWeight => "NotHighestWeight",
            Error::InternalInconsistency(_) => "InternalInconsistency",
            Error::LabelError(_) => "LabelError",
            Error::PartitionError(_) => "PartitionError",
            Error::ComplexityLimit(_) => "ComplexityLimit",
            Error::NotTabulated(_) => "NotTabulated",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
