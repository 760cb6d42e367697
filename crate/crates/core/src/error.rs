use crate::eigen::EigenResult;
use crate::optimize::{AlphaBarResult, OptimalPair};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("factorization failed: non-positive pivot {value:e} at row {row}")]
    Factorization { row: usize, value: f64 },

    #[error("eigen solver did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    EigenNotConverged(Box<EigenResult>),

    #[error("alternating minimization did not converge after {} outer iterations", .0.iterations)]
    NotConverged(Box<OptimalPair>),

    #[error("fixed-point iteration did not converge after {} steps", .0.iterates.len())]
    FixedPointNotConverged(Box<AlphaBarResult>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Dimension { expected, actual })
        }
    }
}
