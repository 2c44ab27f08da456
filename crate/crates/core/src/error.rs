use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("loop edge at vertex {0}")]
    Loop(usize),

    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph is not regular (vertex {vertex} has degree {degree}, expected {expected})")]
    NotRegular {
        vertex: usize,
        degree: usize,
        expected: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection budget exhausted after {attempts} attempts ({loops} with loops, {multi} with parallel edges)")]
    RejectionBudget {
        attempts: u64,
        loops: u64,
        multi: u64,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
