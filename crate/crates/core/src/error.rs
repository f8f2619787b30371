use thiserror::Error;

/// Errors raised by the geometry kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("fields live on different charts")]
    ChartMismatch,
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: String, found: String },
    #[error("left-invariant frame charts have no spectral derivative (invariant fields are constant)")]
    ConstantField,
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("metric not positive definite at grid index {index:?}: leading minor {minor} has pivot {pivot:e}")]
    NotPositiveDefinite {
        index: Vec<usize>,
        minor: usize,
        pivot: f64,
    },
    #[error("umbilical radicand {radicand:e} is negative: requires lambda <= Scal/(n-1)")]
    NegativeRadicand { radicand: f64 },
    #[error("insufficient trajectory samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("time {0} is not an interior sample of the trajectory")]
    NotASample(f64),
    #[error("series order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("singular leading series coefficient")]
    SingularSeries,
    #[error("requested order {requested} exceeds available order {available}")]
    OrderExhausted { requested: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Killing check requires round metric")]
    NotRound,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
