use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("wrong length: expected {expected} entries, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("entry {index} is negative ({value}); composition entries must be >= 0")]
    NegativeEntry { index: usize, value: i64 },
    #[error("entries sum to {found}, expected the total {expected}")]
    SumMismatch { expected: u64, found: i64 },
    #[error("nonzero count {n} outside the feasible range [1, {max}]")]
    OutOfRange { n: usize, max: usize },
    #[error("nonzero counts {from} and {to} differ by more than one")]
    StepTooLarge { from: usize, to: usize },
    #[error("invalid sparsity prior: {0}")]
    InvalidPrior(String),
    #[error("cannot parse prior spec `{spec}`: {reason}")]
    PriorSpec { spec: String, reason: String },
    #[error("property scorer failed: {0}")]
    ScorerFailure(String),
    #[error("every split of the pair ({i}, {j}) has zero target probability")]
    AllZeroWeights { i: usize, j: usize },
    #[error("chain result holds no samples")]
    EmptyChain,
    #[error("state space holds {size} states, above the cap of {cap}")]
    SpaceTooLarge { size: String, cap: usize },
    #[error("every state has infinite energy")]
    DegenerateTarget,
    #[error("distributions are not defined over the same support: {0}")]
    SupportMismatch(String),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}
