use thiserror::Error;

use crate::mdp::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Wealth-space or generator configuration that cannot be used.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid MDP: {}", summarize(.0))]
    Validation(Vec<Violation>),

    /// A precondition of the infinite-horizon solver is not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("value iteration did not converge after {sweeps} sweeps (last residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn summarize(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    if violations.len() > 3 {
        format!("{} (and {} more)", shown.join("; "), violations.len() - 3)
    } else {
        shown.join("; ")
    }
}
