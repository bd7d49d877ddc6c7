use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    /// A curvature point outside the open positive cone.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("non-homogeneous expression: {0}")]
    NonHomogeneous(String),

    #[error("gradient too small to define the critical-point hyperplane (|∇w|∞ = {norm:e}, threshold {threshold:e})")]
    GradientTooSmall { norm: f64, threshold: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("no sampled point lies in region {0}")]
    EmptyRegion(String),

    #[error("unknown identifier: {0}")]
    Unknown(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = CertError> = std::result::Result<T, E>;
