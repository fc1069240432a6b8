use crate::conic::SolveStatus;

/// Errors produced anywhere in the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not diagonally dominant (row {row})")]
    NotDiagonallyDominant { row: usize },

    #[error("eigensolver did not converge within {max_sweeps} sweeps")]
    EigenNonConvergence { max_sweeps: usize },

    #[error("conic solver returned {0:?}")]
    Solver(SolveStatus),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("initial master problem is infeasible: {0}")]
    InitialInfeasible(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("search budget of {nodes} nodes exhausted")]
    Budget { nodes: u64 },

    #[error("gram basis size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
