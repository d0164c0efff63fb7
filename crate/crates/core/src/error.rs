use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("degenerate facet {facet}: measure {measure:e} below threshold {threshold:e}")]
    DegenerateFacet {
        facet: usize,
        measure: f64,
        threshold: f64,
    },
    #[error("ridge {ridge:?} is incident to {count} facets (expected 2)")]
    NonManifoldRidge { ridge: Vec<usize>, count: usize },
    #[error("unsupported dimension {found} (operation requires {expected})")]
    UnsupportedDimension { found: usize, expected: &'static str },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid flex family: {0}")]
    InvalidFamily(String),
    #[error("polygon closure infeasible: {0}")]
    ClosureInfeasible(String),
    #[error("parameter {value} outside the family interval [{lo}, {hi})")]
    ParameterOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("continuation failed at s = {s}: {reason}")]
    ContinuationFailure { s: f64, reason: String },
    #[error("family is not flexible: {0}")]
    NotFlexible(String),
    #[error("resolution exhausted: {0}")]
    ResolutionExhausted(String),
    #[error("tent construction failed: {0}")]
    ConstructionFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("order {p} outside 0..={max}")]
    OrderOutOfRange { p: usize, max: usize },
    #[error("spectrum not sorted ascending at index {0}")]
    UnsortedSpectrum(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
