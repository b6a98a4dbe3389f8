use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no samples")]
    NoSamples,

    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("problem is not strongly convex (mu = 0)")]
    NotStronglyConvex,

    #[error("reference solver did not converge after {iters} iterations (relative residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("iterate diverged at k = {k}: |x| = {norm:e}")]
    Diverged { k: usize, norm: f64 },

    #[error("staleness invariant violated at k = {k}, worker {worker}: age {age} > tau {tau}")]
    StaleGradient {
        k: usize,
        worker: usize,
        age: usize,
        tau: usize,
    },

    #[error("wire decode error: {0}")]
    Wire(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
