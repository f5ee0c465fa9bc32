use thiserror::Error;

use crate::dyadic::MAX_LEVEL;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the library.
///
/// Variants split into two families: malformed or out-of-contract input
/// (`is_input_error`) and failed mathematical verification, which the CLI
/// maps to different exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("level {requested} exceeds the maximum level {MAX_LEVEL}")]
    LevelOverflow { requested: u32 },

    #[error("expected {expected} values for level {level}, got {got}")]
    LengthMismatch { level: u32, expected: usize, got: usize },

    #[error("invalid rational {0:?}")]
    BadRational(String),

    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),

    #[error("invalid dyadic index (k={k}, j={j})")]
    BadIndex { k: u32, j: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("functional h{index} has sup-norm {linf} > 1")]
    FunctionalTooLarge { index: usize, linf: String },

    #[error("gap condition unsatisfiable: {0}")]
    GapCondition(String),

    #[error("operand must be nonzero")]
    ZeroOperand,

    #[error("dyadic sets overlap: ({k1},{j1}) and ({k2},{j2})")]
    OverlappingSets { k1: u32, j1: u64, k2: u32, j2: u64 },

    #[error("{members} members do not fit into 2^{level} cells")]
    Capacity { members: usize, level: u32 },

    #[error("no epsilon schedule satisfies the product condition at k={0}")]
    ScheduleInfeasible(usize),

    #[error("family has no disjoint supports")]
    MissingSupports,

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    /// Whether the error stems from bad input rather than a failed check.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::GapCondition(_) | Error::Verification(_))
    }
}
