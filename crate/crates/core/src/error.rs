use crate::dyadic::CubeId;

/// Errors raised by the evaluation and partition machinery.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("level {level} in dimension {dim} exceeds the enumeration bound (n*d <= {limit})")]
    EnumerationBound { level: u32, dim: usize, limit: u32 },

    #[error("level {level} is deeper than the representable coordinate width ({max})")]
    LevelTooDeep { level: u32, max: u32 },

    #[error("max-depth guard exceeded at cube {cube} (limit {limit})")]
    MaxDepthExceeded { cube: CubeId, limit: u32 },

    #[error("cube budget exceeded: more than {limit} cubes")]
    TooManyCubes { limit: usize },

    #[error("exact evaluation unavailable for this set function")]
    ExactUnavailable,

    #[error("exact recursion exceeded the state cap ({cap})")]
    StateOverflow { cap: usize },

    #[error("tau_n has no zero at level {level}: the level maximum is not below 1")]
    NonBracketing { level: u32 },

    #[error("budget {budget} is below the smallest achievable partition size {min}")]
    EmptyBudget { budget: u64, min: u64 },

    #[error("no feasible partition within depth {depth}")]
    Infeasible { depth: u32 },

    #[error("threshold must lie below the root value")]
    ThresholdAboveRoot,

    #[error("grouped level distribution too large ({groups} groups, limit {limit})")]
    GroupingTooLarge { groups: usize, limit: usize },

    #[error("invalid set function spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Resource guards (depth, enumeration, size caps) as opposed to bad input.
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            Error::EnumerationBound { .. }
                | Error::LevelTooDeep { .. }
                | Error::MaxDepthExceeded { .. }
                | Error::TooManyCubes { .. }
                | Error::StateOverflow { .. }
                | Error::GroupingTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
