use free_group::GroupError;
use thiserror::Error;
use walk::WalkError;

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("{op} is not supported here: {why}")]
    Unsupported { op: &'static str, why: String },

    /// A walk failed to lock in its boundary prefix within the step budget.
    /// Recurrent or nearly recurrent step measures land here.
    #[error("boundary prefix did not stabilize at depth {depth} within {steps} steps ({rounds} slack doublings)")]
    NotStabilized { depth: usize, steps: usize, rounds: usize },

    /// A conditioned walk consumed more boundary depth than its target
    /// carries; the caller must supply a deeper approximation.
    #[error("boundary target exhausted: depth {depth} left after {steps} steps, need at least {needed}")]
    TargetExhausted { depth: usize, steps: usize, needed: usize },

    #[error(transparent)]
    Group(#[from] GroupError),

    #[error(transparent)]
    Walk(#[from] WalkError),
}

pub(crate) fn invalid(why: impl Into<String>) -> HarmonicError {
    HarmonicError::Invalid(why.into())
}

pub(crate) fn unsupported(op: &'static str, why: impl Into<String>) -> HarmonicError {
    HarmonicError::Unsupported { op, why: why.into() }
}
