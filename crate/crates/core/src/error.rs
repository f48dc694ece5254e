use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric singularity: {0}")]
    NumericSingularity(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("value {value} outside range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("dispersive approximation breaks down: cavity and resonator are degenerate")]
    DispersiveBreakdown,
    #[error("nonphysical internal loss: loaded Q {q_loaded} is not below coupling Q {q_coupling}")]
    NonphysicalInternalLoss { q_loaded: f64, q_coupling: f64 },
    #[error("inconsistent loss budget: residual loss {0} is not positive")]
    InconsistentBudget(f64),
    #[error("nonphysical population: mean photon number {0} is negative")]
    NonphysicalPopulation(f64),
    #[error("poor fit window: {0}")]
    PoorWindow(String),
    #[error("underdetermined fit: {points} points for {params} parameters")]
    Underdetermined { points: usize, params: usize },
    #[error("wrong control mode: {0}")]
    WrongMode(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
