use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("free group rank must be between 1 and 126, got {0}")]
    InvalidRank(usize),

    #[error("letter {letter} is out of range for rank {rank} (want 1..={rank} or -{rank}..=-1)")]
    InvalidLetter { letter: i8, rank: u8 },

    #[error("word is not freely reduced: cancellation at position {0}")]
    NotReduced(usize),

    #[error("elements live in different groups (ranks {left} and {right})")]
    GroupMismatch { left: u8, right: u8 },

    #[error("expected a word in rank {expected}, got rank {got}")]
    RankMismatch { expected: u8, got: u8 },

    #[error("boundary prefix must be nonempty")]
    EmptyBoundaryPrefix,

    #[error("boundary approximation too shallow: depth {depth}, need at least {needed}")]
    InsufficientDepth { depth: usize, needed: usize },

    #[error("base point must be the identity for this operation")]
    UnsupportedBasePoint,

    #[error("cannot parse {0:?} as a word: {1}")]
    Parse(String, String),
}
