use free_group::GroupError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("invalid measure: {0}")]
    InvalidSpec(String),

    #[error("{op} is not supported for this measure: {why}")]
    Unsupported { op: &'static str, why: String },

    #[error(transparent)]
    Group(#[from] GroupError),
}

pub(crate) fn unsupported(op: &'static str, why: impl Into<String>) -> WalkError {
    WalkError::Unsupported { op, why: why.into() }
}
