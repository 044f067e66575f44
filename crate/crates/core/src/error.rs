/// Errors produced by the probability kernels, validators, and searches.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A numeric argument fell outside its legal range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A design, rate pair, or search specification violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Selection was handed an empty candidate list.
    #[error("selection requires a non-empty candidate list")]
    EmptyCandidates,

    /// No design satisfies the stated constraints.
    #[error("infeasible search: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
