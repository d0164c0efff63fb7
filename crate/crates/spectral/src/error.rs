use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),
    #[error("k = {k} beyond the trusted range k ≤ {limit}")]
    BeyondTrust { k: f64, limit: f64 },
    #[error(transparent)]
    Core(#[from] flexspec_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
