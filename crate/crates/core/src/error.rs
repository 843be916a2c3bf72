use thiserror::Error;

use crate::metric::PointId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure has nonzero total mass {0}")]
    MeanNotZero(String),
    #[error("point {0} is not in the metric space")]
    UnknownPoint(PointId),
    #[error("word length of {element} exceeds radius cap {cap}")]
    RadiusExceeded { element: String, cap: u32 },
    #[error("pair ({g}, {f}): {source}")]
    Pair {
        g: String,
        f: String,
        #[source]
        source: Box<Error>,
    },
    #[error("empty point set")]
    EmptySet,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("group mismatch")]
    GroupMismatch,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("witness is not 1-Lipschitz at ({0}, {1})")]
    NotLipschitz(PointId, PointId),
    #[error("witness is undefined at {0}")]
    WitnessUndefined(PointId),
    #[error("denominator cap {cap} is smaller than support size {support}")]
    CapTooSmall { cap: usize, support: usize },
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
