use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    ShapeMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("invalid spectral triple: {0}")]
    InvalidTriple(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid crossed element: {0}")]
    InvalidCrossedElement(String),

    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("support leaves the window: {0}")]
    Boundary(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("character states need an abelian group, got {0}")]
    NonAbelian(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
