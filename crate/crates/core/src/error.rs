//! Error type shared by all kernel operations.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    /// A value or intermediate result does not fit the configured bit budget.
    #[error("bit budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Two magnitudes could not be ordered with a sound argument within budget.
    #[error("incomparable within budget: {0}")]
    Incomparable(String),

    /// An operation that requires norm > some threshold was called below it.
    #[error("norm too small: {0}")]
    NormTooSmall(String),

    /// A decisive witness (or a declared table entry) was needed but absent.
    #[error("witness unavailable: {0}")]
    WitnessUnavailable(String),

    /// A stated precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An exhaustive search outgrew its configured node budget.
    #[error("search space exceeded: {0} nodes")]
    SearchSpaceExceeded(u64),

    /// The pigeonhole search found no admissible index, i.e. a precondition was violated.
    #[error("no pigeonhole witness: {0}")]
    NoWitness(String),

    /// Creatures of different kinds or parameters were mixed.
    #[error("kind mismatch: {0}")]
    KindMismatch(String),

    /// A homogeneous class landed inside the avoided set.
    #[error("impossible class: {0}")]
    ImpossibleClass(String),

    /// The name still carries unresolved entries at the truncation depth.
    #[error("horizon exhausted: {0}")]
    HorizonExhausted(String),

    /// Malformed input file or value.
    #[error("schema violation: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;
