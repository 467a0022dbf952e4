use rand::Rng;

use super::{check_kernel_ratio, terminal_value, Problem, SolverConfig, WalkResult, WalkStats};
use crate::error::{Error, Result};
use crate::geometry::{sample_direction, Vec3};
use crate::memory::{sample_closest_point_with_memory_from, Memory};

/// Volumetric walk on spheres: walk on spheres where each step samples the
/// closest particle conditionally on everything the walk has seen so far.
pub fn vwos_estimate<R: Rng + ?Sized>(
    problem: &Problem,
    x0: Vec3,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<WalkResult> {
    if problem.particle_bc.is_neumann() {
        return Err(Error::Config("vwos needs Dirichlet particles; use vwost".into()));
    }
    let field = &problem.pbm.density;
    let s = problem.radius();
    let zero = field.is_zero();
    let mut memory = Memory::new(cfg.memory_mode);
    let mut x = x0;
    let mut steps = 0;
    let stats = |memory: &Memory, steps, truncated| WalkStats {
        steps,
        empty_balls: memory.empty_balls().len() as u64,
        particles: memory.particle_centers().len() as u64,
        truncated,
    };
    loop {
        let medium_hit = problem.medium.closest_point(x);
        if steps >= cfg.max_steps {
            let mut hit = medium_hit;
            if let Some(p) = memory.closest_point_on_sampled_particles(x, s) {
                if p.distance < hit.distance {
                    hit = p;
                }
            }
            return Ok(WalkResult { value: terminal_value(problem, x, &hit), stats: stats(&memory, steps, true) });
        }
        let majorant = if zero { 0.0 } else { field.majorant(x, medium_hit.distance + s) };
        let hit = sample_closest_point_with_memory_from(x, medium_hit, majorant, field, s, &memory, rng)?;
        if hit.distance < cfg.eps {
            return Ok(WalkResult { value: terminal_value(problem, x, &hit), stats: stats(&memory, steps, false) });
        }
        memory.update(x, &hit);
        check_kernel_ratio(hit.distance);
        x += sample_direction(rng, None).get() * hit.distance;
        steps += 1;
    }
}
