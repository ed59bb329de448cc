use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mode vector is not normalized: sum of squares is {0}")]
    Normalization(f64),

    #[error("equilibrium solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("chain is unstable: mode eigenvalue {0} is not positive")]
    Unstable(f64),

    #[error("{what} requires {requested}, which exceeds the cap of {cap}")]
    DimensionCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("propagation did not reach tolerance: {0}")]
    Propagation(String),

    #[error("no admissible root of the ratio polynomial for r = {ratio} at gt = {gt}")]
    NoAdmissibleRoot { ratio: f64, gt: f64 },

    #[error("ambiguous root of the ratio polynomial: candidates {candidates:?}")]
    AmbiguousRoot { candidates: Vec<f64> },

    #[error("sideband probabilities are degenerate (P_b - P_r = {0:e})")]
    DegenerateSidebands(f64),

    #[error("probability {0} is outside the open interval (0, 1)")]
    DegenerateProbability(f64),

    #[error("no usable records: {0}")]
    NoUsableRecords(String),

    #[error("minimum lies at the bracket edge (nbar = {0})")]
    BracketEdge(f64),

    #[error("data are uninformative: {0}")]
    Uninformative(String),

    #[error("coefficient table self-check failed: {0}")]
    TableCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::Normalization(_) => "Normalization",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Unstable(_) => "Unstable",
            Error::DimensionCap { .. } => "DimensionCap",
            Error::Propagation(_) => "Propagation",
            Error::NoAdmissibleRoot { .. } => "NoAdmissibleRoot",
            Error::AmbiguousRoot { .. } => "AmbiguousRoot",
            Error::DegenerateSidebands(_) => "DegenerateSidebands",
            Error::DegenerateProbability(_) => "DegenerateProbability",
            Error::NoUsableRecords(_) => "NoUsableRecords",
            Error::BracketEdge(_) => "BracketEdge",
            Error::Uninformative(_) => "Uninformative",
            Error::TableCheck(_) => "TableCheck",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
