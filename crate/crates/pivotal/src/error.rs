use thiserror::Error;

#[derive(Debug, Error)]
pub enum PivotalError {
    /// Malformed input: wrong lengths, empty sets, mismatched groups.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The supplied constants do not satisfy the inequalities the chain
    /// lemmas need, so none of the structural guarantees would hold.
    #[error("constants out of range: {0}")]
    Constants(String),

    /// A full class enumeration would exceed the member budget.
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    /// No Schottky set could be certified inside the allowed convolution
    /// powers of the step law.
    #[error("no Schottky certificate: {0}")]
    NoCertificate(String),

    #[error(transparent)]
    Group(#[from] free_group::GroupError),

    #[error(transparent)]
    Walk(#[from] walk::WalkError),
}
