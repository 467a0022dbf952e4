use rand::Rng;

use super::{check_kernel_ratio, terminal_value, Problem, SolverConfig, SphereBvh, WalkResult, WalkStats};
use crate::geometry::{sample_direction, ClosestHit, Provenance, Vec3};

/// Closest Dirichlet boundary point: the medium, or a particle of `particles`.
pub(crate) fn deterministic_hit(problem: &Problem, particles: Option<&SphereBvh>, x: Vec3) -> ClosestHit {
    let mut hit = problem.medium.closest_point(x);
    if let Some(bvh) = particles {
        let s = problem.radius();
        if let Some((i, d)) = bvh.nearest(x, None) {
            if d - s < hit.distance {
                let c = bvh.center(i);
                let point = if d > 0.0 { c + (x - c) * (s / d) } else { x };
                hit = ClosestHit { point, distance: d - s, provenance: Provenance::ConfigurationParticle(i) };
            }
        }
    }
    hit
}

/// Walk on spheres against fixed geometry: the medium plus an optional
/// explicit particle configuration with Dirichlet data.
pub fn wos_estimate<R: Rng + ?Sized>(
    problem: &Problem,
    particles: Option<&SphereBvh>,
    x0: Vec3,
    cfg: &SolverConfig,
    rng: &mut R,
) -> WalkResult {
    let mut x = x0;
    let mut steps = 0;
    loop {
        let hit = deterministic_hit(problem, particles, x);
        let truncated = steps >= cfg.max_steps;
        if hit.distance < cfg.eps || truncated {
            return WalkResult {
                value: terminal_value(problem, x, &hit),
                stats: WalkStats { steps, empty_balls: 0, particles: 0, truncated },
            };
        }
        check_kernel_ratio(hit.distance);
        x += sample_direction(rng, None).get() * hit.distance;
        steps += 1;
    }
}
