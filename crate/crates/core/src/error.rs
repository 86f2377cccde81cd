use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("marked space needs at least one point with positive fiber dimensions")]
    InvalidSpace,

    #[error("point index {index} out of range for a space with {n_points} points")]
    PointOutOfRange { index: usize, n_points: usize },

    #[error("a cover needs at least one element")]
    EmptyCover,

    #[error("duplicate open set id `{0}`")]
    DuplicateId(String),

    #[error("open set `{inner}` is not contained in `{outer}`")]
    NotNested { inner: String, outer: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cover sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid section: {0}")]
    InvalidSection(String),

    #[error("the product counterexample needs at least two coordinates (got {0})")]
    DegenerateCounterexample(usize),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("layer plan does not fit the cover: {0}")]
    PlanMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("local sections on elements {} and {} disagree on their overlap (max deviation {deviation})", .first + 1, .second + 1)]
    Incompatible {
        first: usize,
        second: usize,
        deviation: f64,
    },

    #[error("monomial of local section {} is supported outside every pairwise intersection", .element + 1)]
    MonomialOutsideOverlaps { element: usize },

    #[error("local sections do not sum to zero")]
    NotInKernel,

    #[error("section is not polynomial: {0}")]
    NotPolynomial(String),

    #[error("attack null space is zero: {0}")]
    Falsified(String),

    #[error("activation `{0}` is not registered")]
    UnregisteredActivation(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
