//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("derivative order {order} exceeds supported maximum {max}")]
    OrderBounds { order: usize, max: usize },

    #[error("operands live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("time step {dt:.6e} exceeds stability limit, admissible dt <= {max_dt:.6e}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("non-finite value detected in '{label}' at step {step}")]
    NonFinite { label: String, step: usize },

    #[error("time mismatch: {0} vs {1}")]
    TimeMismatch(f64, f64),

    #[error("Gaussian weight overflow: a*Y^2 = {0:.3} exceeds 600")]
    WeightOverflow(f64),

    #[error("composition grid too coarse: {0}")]
    Resolution(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
