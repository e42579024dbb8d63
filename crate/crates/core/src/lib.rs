//! Structured prediction losses built from Bregman projections onto convex
//! polytopes.
//!
//! The numerical core (geometries, polytopes, projections, losses, decoding)
//! is generic over [`scalar::Scalar`] and works in `f32` or `f64`; the
//! aliases below pin it to one precision. Training, file formats and the
//! verification harness use `f64`.

pub mod assignment;
pub mod dataio;
pub mod decode;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod polytope;
pub mod projection;
pub mod scalar;
pub mod structure;
pub mod task;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::Geometry;
pub use polytope::Polytope;
pub use projection::{project, project_with, ProjectOptions};
pub use structure::{Encoding, StructuredLabel};
pub use task::Task;

pub type Polytope64 = polytope::Polytope<f64>;
pub type Polytope32 = polytope::Polytope<f32>;
pub type ProjectionResult64 = projection::ProjectionResult<f64>;
pub type ProjectionResult32 = projection::ProjectionResult<f32>;
pub type LossEval64 = loss::LossEval<f64>;
pub type LossEval32 = loss::LossEval<f32>;
pub type Decomposition64 = decode::LossDecomposition<f64>;
pub type Decomposition32 = decode::LossDecomposition<f32>;
