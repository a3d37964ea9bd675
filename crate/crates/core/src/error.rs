use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}` requires parameter `{param}`")]
    MissingParam { field: String, param: String },
    #[error("field `{0}` has no closed-form potential")]
    NoAnalyticPotential(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("region is empty at the requested resolution: {0}")]
    EmptyRegion(String),
    #[error("level {0} is not crossed by the field")]
    EmptyLevel(f64),
    #[error("curve component is not closed")]
    OpenCurve,
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("eigensolver did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("all quadrature weights underflow")]
    UnderflowDominates,
    #[error("polygon is not simple after update at iteration {0}")]
    NonSimplePolygon(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
