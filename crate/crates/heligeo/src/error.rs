use thiserror::Error;

use crate::sim::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (symmetric part {0:.3e})")]
    NotSkewSymmetric(f64),

    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not a rotation (orthonormality error {ortho:.3e}, det {det})")]
    NotRotation { ortho: f64, det: f64 },

    #[error("sublevel margin must lie in (0, 2), got {0}")]
    InvalidMargin(f64),

    #[error("quadratic bound certification failed at angle {angle} rad")]
    BoundCertification { angle: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("invalid reference: {0}")]
    InvalidReference(String),

    #[error("trace too short: {len} samples, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("no usable fit window: {0}")]
    NoFitWindow(String),

    #[error("config{}: {msg}", at_line(*line))]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("simulation diverged at t = {t:.4} s: {reason}")]
    Diverged {
        t: f64,
        reason: String,
        partial: Box<Trace>,
    },
}

impl Error {
    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" line {line}")
    }
}
