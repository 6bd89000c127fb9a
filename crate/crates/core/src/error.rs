use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("group of size {size} exceeds the cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("objects belong to different groups")]
    GroupMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),

    #[error("no regular dilate found for C = {c} over {tried} grid points")]
    NoRegularDilate { c: f64, tried: usize },

    #[error("spectral energy hypothesis failed: sum {sum} < nu*alpha^2*mu(B) = {required}")]
    HypothesisFailed { sum: f64, required: f64 },
    #[error("energy increment too small: measured {measured} < required {required} ({diagnostics})")]
    IncrementTooSmall {
        measured: f64,
        required: f64,
        diagnostics: String,
    },

    #[error("Katz-Koester initialisation failed: best sigma {achieved} < {required}")]
    InitFailed { achieved: f64, required: f64 },
    #[error("case split failed: {0}")]
    CaseSplitFailed(String),
    #[error("postcondition failed: {0}")]
    PostconditionFailed(String),
    #[error("maximum step count {0} exceeded")]
    MaxStepsExceeded(usize),

    #[error("sampled almost-periodicity search found no valid translate set after {draws} draws")]
    EmptyResult { draws: usize },
    #[error("dichotomy failed: {0}")]
    DichotomyFailed(String),

    #[error("3AP counting requires a group of odd order, got {0}")]
    EvenOrder(usize),
    #[error("element {value} outside 1..={n}")]
    OutOfRange { value: i64, n: usize },
    #[error("iteration step {step} stalled: {reason}")]
    StepStalled { step: usize, reason: String },
    #[error("no valid construction parameters for N = {0}")]
    NoConstruction(usize),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag for JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGroup(_) => "InvalidGroup",
            Error::SizeCapExceeded { .. } => "SizeCapExceeded",
            Error::GroupMismatch => "GroupMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::NoRegularDilate { .. } => "NoRegularDilate",
            Error::HypothesisFailed { .. } => "HypothesisFailed",
            Error::IncrementTooSmall { .. } => "IncrementTooSmall",
            Error::InitFailed { .. } => "InitFailed",
            Error::CaseSplitFailed(_) => "CaseSplitFailed",
            Error::PostconditionFailed(_) => "PostconditionFailed",
            Error::MaxStepsExceeded(_) => "MaxStepsExceeded",
            Error::EmptyResult { .. } => "EmptyResult",
            Error::DichotomyFailed(_) => "DichotomyFailed",
            Error::EvenOrder(_) => "EvenOrder",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::StepStalled { .. } => "StepStalled",
            Error::NoConstruction(_) => "NoConstruction",
            Error::Config(_) => "Config",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
