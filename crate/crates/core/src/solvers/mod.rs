//! Walk-based estimators.
//!
//! | method        | particles                         | particle condition |
//! |---------------|-----------------------------------|--------------------|
//! | `wos`         | none, or an explicit configuration | Dirichlet          |
//! | `wost`        | none, or an explicit configuration | zero Neumann       |
//! | `vwos`        | sampled along the walk            | Dirichlet          |
//! | `vwost`       | sampled along the walk            | zero Neumann       |
//! | `ea`          | explicit configurations, averaged | either             |
//! | `homogenized` | replaced by a screening term      | zero Dirichlet     |
//!
//! All walks share one termination rule: once the distance to the nearest
//! Dirichlet boundary drops below `eps`, the walk returns the medium data at
//! the closest medium-boundary point, or the particle data at the walk point
//! if a particle was nearer.

mod bvh;
mod driver;
mod ensemble;
mod estimate;
mod homogenized;
mod problem;
mod rng;
mod star;
mod vwos;
mod wos;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClosestHit, Vec3};
use crate::memory::MemoryMode;

pub use bvh::SphereBvh;
pub use driver::{check_method, solve_points, Method, PointResult};
pub use ensemble::{ensemble_average, ensemble_average_with, expected_particle_count, MAX_EXPECTED_PARTICLES};
pub use estimate::{Accumulator, Estimate, WalkResult, WalkStats};
pub use homogenized::{homogenized_estimate, screened_weight, screening_coefficient};
pub use problem::{BoundaryFunction, ParticleCondition, Problem};
pub use rng::{configuration_rng, walk_rng};
pub use star::{collect_star_particles, silhouette_radius, vwost_estimate, wost_estimate};
pub use vwos::vwos_estimate;
pub use wos::wos_estimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Width of the termination shell around Dirichlet boundaries.
    pub eps: f64,
    pub max_steps: u64,
    pub n_walks: u64,
    pub seed: u64,
    pub memory_mode: MemoryMode,
    /// Lower clamp on star radii set by particle silhouettes; defaults to `eps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { eps: 1e-4, max_steps: 10_000, n_walks: 256, seed: 0, memory_mode: MemoryMode::Full, r_min: None }
    }
}

impl SolverConfig {
    /// Checks the config against particle radius `s`.
    pub fn validate(&self, s: f64) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.eps > s / 10.0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "eps = {} must be at most a tenth of the particle radius {s}",
                self.eps
            )));
        }
        if self.max_steps == 0 || self.n_walks == 0 {
            return Err(Error::Config("max_steps and n_walks must be positive".into()));
        }
        if let Some(r) = self.r_min {
            if !(r > 0.0) {
                return Err(Error::Config(format!("r_min must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub fn star_clamp(&self) -> f64 {
        self.r_min.unwrap_or(self.eps)
    }
}

/// Ratio of the harmonic-measure density on a sphere to the uniform sampling
/// density. It is 1 for the Laplace equation, which is why walk values are
/// never reweighted.
pub fn laplace_kernel_ratio(radius: f64) -> f64 {
    // Poisson kernel of the ball evaluated at its center, over the uniform
    // surface density.
    let poisson = radius * radius / (4.0 * PI * radius * radius.powi(3));
    poisson * (4.0 * PI * radius * radius)
}

#[inline]
fn check_kernel_ratio(radius: f64) {
    debug_assert!((laplace_kernel_ratio(radius) - 1.0).abs() < 1e-12);
}

/// Value returned by a Dirichlet walk whose closest boundary point is `hit`.
#[inline]
fn terminal_value(problem: &Problem, x: Vec3, hit: &ClosestHit) -> f64 {
    if hit.provenance.is_medium() {
        problem.g(hit.point)
    } else {
        problem.particle_value(x)
    }
}
