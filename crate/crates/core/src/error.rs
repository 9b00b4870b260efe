use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes one argument (byte {offset})")]
    Arity { name: String, offset: usize },

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("finite-difference stencil leaves the chart domain: {0}")]
    StencilOutsideDomain(String),

    #[error("pushforward has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("Gram-Schmidt breakdown: pivot {pivot:e} below tolerance")]
    GramSchmidtBreakdown { pivot: f64 },

    #[error("vertical/horizontal splitting jumps by {jump:e} across the stencil")]
    FrameDiscontinuity { jump: f64 },

    #[error("plane basis vectors are parallel")]
    DegeneratePlane,

    #[error("plane vector leaves its distribution (residual {residual:e})")]
    PlaneOutsideDistribution { residual: f64 },

    #[error("space of dimension {dim} has no 2-planes")]
    DimensionTooSmall { dim: usize },

    #[error("fiber dimension r = {r} must exceed 2")]
    FiberTooSmall { r: usize },

    #[error("metric does not fit the declared space-form model (residual {residual:e} > {tol:e})")]
    ModelMisfit { residual: f64, tol: f64 },

    #[error("structure vector field is neither vertical nor horizontal (|h xi| = {horizontal:e}, |v xi| = {vertical:e})")]
    MixedStructureVector { horizontal: f64, vertical: f64 },

    #[error("model family `{0}` needs structure tensors")]
    MissingStructure(String),

    #[error("structure axiom `{axiom}` fails (residual {residual:e})")]
    StructureViolation { axiom: String, residual: f64 },

    #[error("closed form and raw curvature disagree by {residual:e}")]
    CrossCheck { residual: f64 },

    #[error("lemma constraint violated (residual {residual:e})")]
    ConstraintViolated { residual: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("missing field: {0}")]
    MissingField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
