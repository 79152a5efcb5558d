use std::io;

use thiserror::Error;

/// Errors produced while building or querying a visibility color map.
#[derive(Debug, Error)]
pub enum VcmError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target is imperceptible: visual angle at the near point ({v0_arcmin:.3}') does not exceed mu ({mu_arcmin}')")]
    Imperceptible { v0_arcmin: f64, mu_arcmin: f64 },

    #[error("obstacle {id} intersects the target")]
    ObstacleOverlapsTarget { id: u64 },

    #[error("point lies inside or on the rectangle")]
    PointInsideRect,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("inputs were built for different targets or parameters")]
    MismatchedInputs,

    #[error("reference map has zero total color mass")]
    ZeroReference,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = VcmError> = std::result::Result<T, E>;

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> VcmError {
    VcmError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
