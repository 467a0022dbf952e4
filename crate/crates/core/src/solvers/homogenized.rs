use std::f64::consts::PI;

use rand::Rng;

use super::{Problem, SolverConfig, WalkResult, WalkStats};
use crate::error::{Error, Result};
use crate::geometry::{sample_direction, Vec3};

/// Screening coefficient `4πλs` that replaces absorbing particles in the
/// homogenized problem.
pub fn screening_coefficient(lambda: f64, s: f64) -> f64 {
    4.0 * PI * lambda * s
}

/// Per-step weight `√σ R / sinh(√σ R)` of walk on spheres for the screened
/// equation. Lies in `(0, 1]`.
pub fn screened_weight(sigma: f64, radius: f64) -> f64 {
    let k = sigma.sqrt() * radius;
    if k < 1e-8 {
        1.0
    } else if k > 700.0 {
        0.0
    } else {
        k / k.sinh()
    }
}

/// Walk on spheres for `Δu = σu` on the medium without particles.
pub fn homogenized_estimate<R: Rng + ?Sized>(
    problem: &Problem,
    x0: Vec3,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<WalkResult> {
    let lambda = problem
        .pbm
        .density
        .homogeneous_value()
        .ok_or_else(|| Error::Config("homogenization needs a constant density".into()))?;
    if !problem.particles_absorb_to_zero() {
        return Err(Error::Config("homogenization needs zero Dirichlet data on particles".into()));
    }
    let sigma = screening_coefficient(lambda, problem.radius());
    let mut weight = 1.0;
    let mut x = x0;
    let mut steps = 0;
    loop {
        let hit = problem.medium.closest_point(x);
        let truncated = steps >= cfg.max_steps;
        if hit.distance < cfg.eps || truncated {
            return Ok(WalkResult {
                value: weight * problem.g(hit.point),
                stats: WalkStats { steps, empty_balls: 0, particles: 0, truncated },
            });
        }
        weight *= screened_weight(sigma, hit.distance);
        x += sample_direction(rng, None).get() * hit.distance;
        steps += 1;
    }
}
