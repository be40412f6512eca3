use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("amplitude bound must be positive and finite, got {0}")]
    InvalidOmega(f64),

    #[error("segment duration must be positive and finite, got {0}")]
    InvalidDuration(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("amplitude bound mismatch: generator has {generator}, pulse has {pulse}")]
    OmegaMismatch { generator: f64, pulse: f64 },

    #[error("series for the step kernel did not converge within {0} terms")]
    SeriesDivergence(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("t_max exhausted: no QSL found up to T = {t_max} (best cost {best_cost:e})")]
    TmaxExhausted { t_max: f64, best_cost: f64 },

    #[error("cannot shrink pulse from T = {from} to T = {to}")]
    ShrinkingDuration { from: f64, to: f64 },

    #[error("ill-conditioned polynomial fit: {0}")]
    IllConditionedFit(String),

    #[error("gate error reaches the numerical noise floor inside the slope range")]
    NoiseFloor,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
