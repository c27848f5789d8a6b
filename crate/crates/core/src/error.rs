use thiserror::Error;

/// Errors raised by the library. Guard violations carry enough context to
/// explain the rejection without re-running the computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("level {level} rejected: predicted {vertices} vertices exceeds the cap of {cap}")]
    LevelTooLarge { level: usize, vertices: f64, cap: usize },

    #[error("level {level} is not available (built levels 1..={max})")]
    MissingLevel { level: usize, max: usize },

    #[error("enumeration budget exceeded: {estimate} paths predicted, budget {budget}")]
    BudgetExceeded { estimate: f64, budget: u64 },

    #[error("order {order} exceeds the cap of {cap}")]
    OrderTooLarge { order: usize, cap: usize },

    #[error("path is not a proper closed path: {0}")]
    NotProper(String),

    #[error("guard rejected: {0}")]
    Guard(String),

    #[error("no separating half-plane: {0}")]
    NoCertificate(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
