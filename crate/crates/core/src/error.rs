use thiserror::Error;

/// Errors raised by domain construction, solves, sampling and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("lattice domain has an empty interior")]
    EmptyInterior,
    #[error("lattice domain interior is not connected")]
    Disconnected,
    #[error("subdomain has a hole (not simply connected)")]
    NotSimplyConnected,
    #[error("ball of radius {radius} at ({x}, {y}) is not contained with clearance {clearance}")]
    BallNotContained { x: f64, y: f64, radius: f64, clearance: f64 },
    #[error("ball radius {0} is too small for interpolation at a non-lattice centre")]
    BallTooSmall(f64),
    #[error("point ({0}, {1}) violates the boundary clearance")]
    PointTooCloseToBoundary(f64, f64),
    #[error("vertex ({0}, {1}) is not an interior vertex")]
    VertexNotInterior(i32, i32),
    #[error("point ({0}, {1}) is not inside the subdomain")]
    PointNotInSubdomain(f64, f64),
    #[error("subdomain is not contained in the parent domain")]
    SubdomainNotContained,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field belongs to a different domain")]
    DomainMismatch,
    #[error("non-finite value in field data")]
    NonFinite,
    #[error("factorization failed at row {0}: matrix is not positive definite")]
    FactorizationFailure(usize),
    #[error("solve residual {residual:e} exceeds tolerance {tol:e}")]
    SolveInaccurate { residual: f64, tol: f64 },
    #[error("vertex is too close to the boundary for a conformal radius estimate")]
    TooCloseToBoundary,
    #[error("mollifier support escapes the domain interior")]
    SupportEscapesDomain,
    #[error("points are closer than twice the averaging radius")]
    PointsTooClose,
    #[error("coincident points")]
    CoincidentPoints,
    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("point ({0}, {1}) lies outside the source domain of the map")]
    PointOutsideSource(f64, f64),
    #[error("image of the test function escapes the target domain")]
    ImageEscapesTarget,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("subinterval endpoint {0} is not a grid time")]
    SubintervalOffGrid(f64),
    #[error("Brownian path horizon {have} is shorter than required {need}")]
    HorizonTooShort { have: f64, need: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("malformed data file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
