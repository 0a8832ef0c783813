use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("arity mismatch for `{predicate}` at {line}:{column}: expected {expected}, found {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },
    #[error("unsafe rule at {line}:{column}: head variable `{variable}` does not occur in the body")]
    UnsafeRule {
        variable: String,
        line: usize,
        column: usize,
    },
    #[error("atom `{0}` is not in the program's vocabulary")]
    UnknownAtom(String),
    #[error("atom `{0}` is not a fact of the reference knowledge base")]
    NotInReference(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not a probability kernel: {0}")]
    NotStochastic(String),
    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("distortion {target} is below the minimum achievable distortion {minimum}")]
    Infeasible { target: f64, minimum: f64 },
    #[error("receiver misses core atoms: {0}")]
    CoreNotCovered(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
