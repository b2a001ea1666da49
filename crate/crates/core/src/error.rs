use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lattice basis is singular (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error(
        "physical projection is not injective: lattice vector {n:?} has physical norm {norm:e}"
    )]
    InjectivityFailure { n: Vec<i64>, norm: f64 },

    #[error("enumeration region too large: {lines} integer lines exceed budget {budget}")]
    RegionTooLarge { lines: u128, budget: u64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("inner window is not contained in the outer window near {0:?}")]
    NotNested(Vec<f64>),

    #[error("no free position for a point-free cube of side {side} within search range {range}")]
    PlacementFailure { side: f64, range: f64 },

    #[error("averaging region has zero volume")]
    EmptyRegion,

    #[error("range {range} exceeds region half-width {half_width}")]
    RangeTooLarge { range: f64, half_width: f64 },

    #[error("patches do not share provenance: {0}")]
    InconsistentProvenance(String),

    #[error("sample step {step} does not resolve kernel of half-width {halfwidth}")]
    StepTooCoarse { step: f64, halfwidth: f64 },

    #[error("{count} peaks above threshold exceed budget {budget}")]
    ThresholdTooLow { count: usize, budget: usize },

    #[error("frequency {k:?} matches more than one dual lattice point")]
    AmbiguousDualMatch { k: Vec<f64> },

    #[error("no empirical value for frequency {0:?}")]
    FrequencyMismatch(Vec<f64>),

    #[error("patch point {0:?} has no lattice embedding")]
    NoLatticeEmbedding(Vec<f64>),

    #[error("patch constraints leave an empty feasible box")]
    EmptyFeasibleBox,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
