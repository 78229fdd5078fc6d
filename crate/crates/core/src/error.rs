use thiserror::Error;

/// Errors raised by the planner and its oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("communication budget is exhausted (upsilon = {0})")]
    BudgetExhausted(f64),

    #[error("no finite perfect matching exists")]
    NoPerfectMatching,

    #[error("value {0} is outside the representable range of the inverse gradient")]
    OutOfRange(f64),

    #[error("{what} exceeds the size guard ({got} > {limit})")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("cannot branch on a prefix that already fixes all {0} vertices")]
    BranchAtLeaf(usize),

    #[error("a single-vertex graph has no neighbouring selections")]
    NoNeighbor,

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
