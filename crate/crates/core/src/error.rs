use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("node {node} is isolated; extract the largest connected component first")]
    IsolatedNode { node: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("inconsistent partition: {0}")]
    InconsistentPartition(String),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("need at least {k} points to form {k} clusters, got {n}")]
    TooFewPoints { n: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations (worst residual {worst:.3e})"
    )]
    NotConverged {
        iterations: usize,
        worst: f64,
        residuals: Vec<f64>,
    },

    #[error("no candidate partition could be computed for any K")]
    AllCandidatesFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::EmptyGraph => "E_EMPTY_GRAPH",
            Error::NodeOutOfRange { .. } => "E_NODE_RANGE",
            Error::IsolatedNode { .. } | Error::Disconnected => "E_DISCONNECTED",
            Error::InvalidParams(_) => "E_PARAMS",
            Error::InconsistentPartition(_) => "E_PARTITION",
            Error::SizeMismatch { .. } => "E_SIZE_MISMATCH",
            Error::TooFewPoints { .. } => "E_TOO_FEW_POINTS",
            Error::InvalidArgument(_) => "E_ARGUMENT",
            Error::NotConverged { .. } => "E_NOT_CONVERGED",
            Error::AllCandidatesFailed => "E_NO_CANDIDATE",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}
