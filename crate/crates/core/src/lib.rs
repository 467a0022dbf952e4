//! Monte Carlo estimators for Laplace problems in media perforated by random
//! spherical particles.
//!
//! Particles follow a Poisson Boolean model: equal-radius balls whose centers
//! form a Poisson process with density [`DensityField`]. The volumetric walks
//! ([`solvers::vwos_estimate`], [`solvers::vwost_estimate`]) sample the
//! particle geometry lazily along each walk instead of building explicit
//! configurations, and estimate the solution averaged over configurations.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod memory;
pub mod pbm;
pub mod solvers;

pub use density::{DensityField, DensityVariant, GaussianTerm, Intensity, PbmParams, TrilinearGrid};
pub use error::{Error, GeometryError, Result, SamplingError};
pub use geometry::{Aabb, ClosestHit, MediumShape, Primitive, Provenance, UnitVec3, Vec3};
pub use harness::{EvalPlane, RunReport, SceneSpec};
pub use memory::{Memory, MemoryMode};
pub use pbm::{ClosestPointOutcome, ConditionalDensityView, EmptyBall, ParticleConfiguration};
pub use solvers::{BoundaryFunction, Estimate, Method, ParticleCondition, Problem, SolverConfig, WalkStats};
