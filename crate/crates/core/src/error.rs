use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {n}")]
    GridTooSmall { n: usize, min: usize },
    #[error("grid mismatch: {0} vs {1} nodes")]
    GridMismatch(usize, usize),
    #[error("argument {name} = {value} lies in pi*Z")]
    Domain { name: &'static str, value: f64 },
    #[error("function touches the boundary circle (min value {0})")]
    TouchesBoundary(f64),
    #[error("hemisphere parameter d must be positive, got {0}")]
    DegenerateSphere(f64),
    #[error("degenerate norm: {0}")]
    DegenerateNorm(String),
    #[error("no convergence after {rounds} rounds (last change {change:e})")]
    NoConvergence { rounds: usize, change: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
