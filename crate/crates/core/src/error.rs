use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("complex dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("form degree {degree} out of range for operation `{op}` (n = {n})")]
    DegreeOutOfRange { op: &'static str, degree: usize, n: usize },

    #[error("metric not positive definite{}", node.map(|i| format!(" at node {i}")).unwrap_or_default())]
    NotPositiveDefinite { node: Option<usize> },

    #[error("form is not primitive: |Λa| = {0:.3e} above tolerance")]
    NotPrimitive(f64),

    #[error("missing torsion data: {0}")]
    MissingTorsion(&'static str),

    #[error("grid resolution invalid: {0}")]
    InvalidGrid(String),

    #[error("gauge transformation ill-conditioned at node {node}: cond = {cond:.3e}")]
    IllConditionedGauge { node: usize, cond: f64 },

    #[error("bundle state invalid: {0}")]
    InvalidBundle(String),

    #[error("filtration invalid: {0}")]
    InvalidFiltration(String),

    #[error("flow aborted: {0}")]
    FlowAborted(String),

    #[error("monotonicity violated: {0}")]
    MonotonicityViolated(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("p-norm requires p >= 1, got {0}")]
    InvalidNorm(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
