//! Critical-point certificates for contracting curvature flows.
//!
//! The crate evaluates symmetric functions of principal curvatures together
//! with exact first and second derivatives ([`jet`], [`function`]), decomposes
//! the parabolic operator `Lw` at a critical point of a test quantity
//! ([`operator`]), and checks set inclusions between pinching cones,
//! sublevel sets and certificate sets by sampling the curvature simplex
//! ([`sampling`], [`region`], [`flow`]).
//!
//! The jet and operator layers are generic over the scalar type; the
//! sampling and reporting layers work in `f64`.

pub mod config;
pub mod error;
pub mod export;
pub mod flow;
pub mod function;
pub mod jet;
pub mod operator;
pub mod point;
pub mod region;
pub mod report;
pub mod sampling;
pub mod scalar;

pub use config::{RunConfig, Tolerances};
pub use error::{CertError, Result};
pub use flow::{FlowConfig, FlowName, FlowPreset, FlowReport};
pub use function::{Builtin, SymmetricFunction};
pub use jet::Jet2;
pub use point::CurvaturePoint;
pub use region::{InclusionReport, RegionSpec};
pub use sampling::Sampler;
pub use scalar::Scalar;

/// Three principal curvatures in double precision.
pub type Point3 = CurvaturePoint<f64, 3>;
pub type Point3f32 = CurvaturePoint<f32, 3>;
pub type Jet3 = Jet2<f64, 3>;
pub type Jet3f32 = Jet2<f32, 3>;
pub type Decomposition = operator::OperatorDecomposition<f64>;
pub type Certificate = operator::Certificate<f64>;
