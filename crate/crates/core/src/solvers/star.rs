//! Walk on stars for zero-flux particles.
//!
//! Each step certifies a ball `B(x, r)` with `r` no larger than the distance to
//! the medium boundary or to the nearest particle silhouette, then shoots a
//! ray in a uniform direction and moves to the first particle hit, or to the
//! sphere of radius `r` if no particle is in the way. Walks standing on a
//! particle shoot into the hemisphere facing away from it.

use rand::Rng;

use super::{Problem, SolverConfig, SphereBvh, WalkResult, WalkStats};
use crate::density::{DensityField, Intensity};
use crate::error::{Error, Result};
use crate::geometry::{dir, first_ray_sphere_hit, sample_direction, Vec3};
use crate::memory::Memory;
use crate::pbm::{ConditionalDensityView, ThinningStream};

const MAX_RETRIES: usize = 16;

/// Distance from `x` to the silhouette of the particle at `center`.
pub fn silhouette_radius(x: Vec3, center: Vec3, s: f64) -> Result<f64> {
    let d = x.distance(center);
    if d <= s {
        return Err(Error::InvalidInput(format!("point lies inside the particle at {center:?}")));
    }
    Ok((d * d - s * s).sqrt())
}

/// Silhouette distance treating a particle that contains `x` as distance zero.
#[inline]
fn silhouette_or_zero(d: f64, s: f64) -> f64 {
    if d > s {
        (d * d - s * s).sqrt()
    } else {
        0.0
    }
}

/// Next walk point, and the center of the particle it landed on.
fn star_step<R: Rng + ?Sized>(
    x: Vec3,
    r: f64,
    on: Option<Vec3>,
    obstacles: &[Vec3],
    s: f64,
    rng: &mut R,
) -> (Vec3, Option<Vec3>) {
    let axis = on.and_then(|c| dir(c, x).ok());
    let t_min = if on.is_some() { 1e-6 * s } else { 0.0 };
    let s2 = s * s;
    let mut attempt = 0;
    loop {
        let w = sample_direction(rng, axis);
        let mut best_t = r;
        let mut best = None;
        let mut degenerate = false;
        for &c in obstacles {
            if Some(c) == on || x.distance_squared(c) < s2 {
                continue;
            }
            if let Some((t, p)) = first_ray_sphere_hit(x, w, c, s, t_min, best_t) {
                if !p.is_finite() {
                    degenerate = true;
                    break;
                }
                best_t = t;
                best = Some((p, c));
            }
        }
        if degenerate && attempt < MAX_RETRIES {
            attempt += 1;
            continue;
        }
        return match best {
            Some((p, c)) if !degenerate => (p, Some(c)),
            _ => (x + w.get() * r, None),
        };
    }
}

/// Keeps sweeping a conditional stream past the closest particle and returns
/// every accepted center within `r + s` of `x`.
pub fn collect_star_particles<R: Rng + ?Sized>(
    x: Vec3,
    r: f64,
    view: &ConditionalDensityView<'_>,
    majorant: f64,
    s: f64,
    rng: &mut R,
) -> Result<Vec<Vec3>> {
    let mut stream = ThinningStream::new(x, majorant, (r + s).min(view.support_radius(x)))?;
    let mut out = Vec::new();
    while let Some(c) = stream.next_center(view, rng)? {
        out.push(c);
    }
    Ok(out)
}

/// Sweeps candidates outward from `x`, shrinking the star radius at the first
/// accepted particle. Returns the final radius and every center inside it.
fn sweep_star<R: Rng + ?Sized>(
    x: Vec3,
    mut r: f64,
    clamp: f64,
    view: &ConditionalDensityView<'_>,
    majorant: f64,
    s: f64,
    rng: &mut R,
) -> Result<(f64, Vec<Vec3>)> {
    let mut stream = ThinningStream::new(x, majorant, (r + s).min(view.support_radius(x)))?;
    let mut collected = Vec::new();
    while let Some(c) = stream.next_center(view, rng)? {
        let rc = silhouette_or_zero(x.distance(c), s).max(clamp);
        if rc < r {
            r = rc;
            stream.shrink_limit(r + s);
        }
        debug_assert!(x.distance(c) <= r + s * (1.0 + 1e-12));
        collected.push(c);
    }
    Ok((r, collected))
}

fn neumann_check(problem: &Problem, name: &str) -> Result<()> {
    if problem.particle_bc.is_neumann() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} needs zero-Neumann particles")))
    }
}

/// Deterministic walk on stars against an explicit configuration.
pub fn wost_estimate<R: Rng + ?Sized>(
    problem: &Problem,
    particles: &SphereBvh,
    x0: Vec3,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<WalkResult> {
    neumann_check(problem, "wost")?;
    let s = problem.radius();
    let clamp = cfg.star_clamp();
    let mut x = x0;
    let mut on: Option<Vec3> = None;
    let mut steps = 0;
    let mut local = Vec::new();
    loop {
        let mh = problem.medium.closest_point(x);
        let truncated = steps >= cfg.max_steps;
        if mh.distance < cfg.eps || truncated {
            return Ok(WalkResult {
                value: problem.g(mh.point),
                stats: WalkStats { steps, empty_balls: 0, particles: 0, truncated },
            });
        }
        let mut r = mh.distance;
        if let Some((_, d)) = particles.nearest(x, on) {
            r = r.min(silhouette_or_zero(d, s).max(clamp));
        }
        local.clear();
        local.extend(particles.within_radius(x, r + s).into_iter().map(|i| particles.center(i)));
        (x, on) = star_step(x, r, on, &local, s, rng);
        steps += 1;
    }
}

/// Volumetric walk on stars: walk on stars where particles are sampled along
/// the walk, conditionally on the walk's memory.
///
/// The walk is conditioned on `x0` lying outside every particle.
pub fn vwost_estimate<R: Rng + ?Sized>(
    problem: &Problem,
    x0: Vec3,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<WalkResult> {
    neumann_check(problem, "vwost")?;
    let field: &DensityField = &problem.pbm.density;
    let s = problem.radius();
    let clamp = cfg.star_clamp();
    let zero = field.is_zero();
    let mut memory = Memory::new(cfg.memory_mode);
    memory.condition_uncovered(x0);
    let mut x = x0;
    let mut on: Option<Vec3> = None;
    let mut steps = 0;
    let mut obstacles = Vec::new();
    loop {
        let mh = problem.medium.closest_point(x);
        let truncated = steps >= cfg.max_steps;
        if mh.distance < cfg.eps || truncated {
            return Ok(WalkResult {
                value: problem.g(mh.point),
                stats: WalkStats {
                    steps,
                    empty_balls: memory.empty_balls().len() as u64,
                    particles: memory.particle_centers().len() as u64,
                    truncated,
                },
            });
        }
        let mut r = mh.distance;
        if let Some((_, d)) = memory.nearest_particle(x, on) {
            r = r.min(silhouette_or_zero(d, s).max(clamp));
        }
        let majorant = if zero { 0.0 } else { field.majorant(x, mh.distance + s) };
        let (r, collected) = sweep_star(x, r, clamp, &memory.view(field, s), majorant, s, rng)?;

        let reach = (r + s) * (r + s);
        obstacles.clear();
        obstacles.extend(memory.particle_centers().iter().copied().filter(|c| x.distance_squared(*c) <= reach));
        obstacles.extend_from_slice(&collected);
        memory.record_empty(x, r);
        for c in collected {
            memory.add_particle(c);
        }
        (x, on) = star_step(x, r, on, &obstacles, s, rng);
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{GaussianTerm, PbmParams};
    use crate::geometry::MediumShape;
    use crate::solvers::{walk_rng, wos_estimate, BoundaryFunction, ParticleCondition};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube() -> MediumShape {
        MediumShape::cube(Vec3::splat(-1.0), Vec3::splat(1.0)).unwrap()
    }

    fn problem(lambda: f64, g: BoundaryFunction) -> Problem {
        let pbm = PbmParams::new(DensityField::constant(lambda, cube()).unwrap(), 0.05).unwrap();
        Problem::new(cube(), g, pbm, ParticleCondition::NeumannZero).unwrap()
    }

    #[test]
    fn silhouette_examples() {
        assert_abs_diff_eq!(silhouette_radius(Vec3::ZERO, Vec3::X, 0.6).unwrap(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(silhouette_radius(Vec3::ZERO, Vec3::X, 1e-9).unwrap(), 1.0, epsilon = 1e-12);
        assert!(silhouette_radius(Vec3::ZERO, Vec3::X, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn silhouette_grows_with_distance(d1 in 0.11f64..5.0, extra in 1e-6f64..5.0, s in 0.01f64..0.1) {
            let a = silhouette_radius(Vec3::ZERO, Vec3::new(d1, 0.0, 0.0), s).unwrap();
            let b = silhouette_radius(Vec3::ZERO, Vec3::new(d1 + extra, 0.0, 0.0), s).unwrap();
            prop_assert!(b > a);
        }
    }

    #[test]
    fn zero_density_matches_wos_bit_for_bit() {
        let g = BoundaryFunction::split_cos_default();
        let p = problem(0.0, g);
        let cfg = SolverConfig::default();
        let empty = SphereBvh::build(&[]);
        for w in 0..2000 {
            let x = Vec3::new(0.3, 0.1, -0.2);
            let a = vwost_estimate(&p, x, &cfg, &mut walk_rng(2, 0, w)).unwrap();
            let b = wos_estimate(&p, None, x, &cfg, &mut walk_rng(2, 0, w));
            let c = wost_estimate(&p, &empty, x, &cfg, &mut walk_rng(2, 0, w)).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(c.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn constant_data_is_exact() {
        let p = problem(500.0, BoundaryFunction::constant(0.4));
        let cfg = SolverConfig::default();
        for w in 0..300 {
            assert_eq!(vwost_estimate(&p, Vec3::ZERO, &cfg, &mut walk_rng(8, 0, w)).unwrap().value, 0.4);
        }
    }

    #[test]
    fn far_particle_leaves_first_step_alone() {
        let p = problem(0.0, BoundaryFunction::Linear { axis: 0, scale: 1.0, offset: 0.0 });
        let bvh = SphereBvh::build(&[Vec3::new(0.9, 0.9, 0.9)]);
        let cfg = SolverConfig { max_steps: 1, ..Default::default() };
        let x = Vec3::new(-0.5, 0.0, 0.0);
        let a = wost_estimate(&p, &bvh, x, &cfg, &mut walk_rng(1, 1, 1)).unwrap();
        let b = wos_estimate(&p, None, x, &cfg, &mut walk_rng(1, 1, 1));
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn nearest_center_has_smallest_silhouette() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = 0.05;
        for _ in 0..200 {
            let centers: Vec<Vec3> = (0..50)
                .map(|_| {
                    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
                .collect();
            let bvh = SphereBvh::build(&centers);
            let x = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if centers.iter().any(|c| c.distance(x) <= s) {
                continue;
            }
            let (i, _) = bvh.nearest(x, None).unwrap();
            let best = silhouette_radius(x, centers[i], s).unwrap();
            for &c in &centers {
                assert!(best <= silhouette_radius(x, c, s).unwrap());
            }
        }
    }

    #[test]
    fn star_particles_stay_in_reach() {
        let f = DensityField::gaussian_sum(
            vec![GaussianTerm { amplitude: 3000.0, center: Vec3::ZERO, width: 0.5 }],
            cube(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = 0.02;
        for _ in 0..500 {
            let x = Vec3::new(rng.random_range(-0.5..0.5), 0.0, 0.0);
            let r = rng.random_range(0.01..0.3);
            let view = ConditionalDensityView::new(&f, &[], s);
            let got = collect_star_particles(x, r, &view, f.majorant(x, r + s), s, &mut rng).unwrap();
            assert!(got.iter().all(|c| c.distance(x) <= r + s));
        }
        let zero = DensityField::constant(0.0, cube()).unwrap();
        let view = ConditionalDensityView::new(&zero, &[], s);
        assert!(collect_star_particles(Vec3::ZERO, 0.5, &view, 0.0, s, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn walks_on_particles_leave_outward() {
        let s = 0.1;
        let c = Vec3::new(0.0, 0.0, 0.0);
        let x = Vec3::new(s, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (next, _) = star_step(x, 0.05, Some(c), &[c], s, &mut rng);
            assert!(next.distance(c) >= s - 1e-12);
            assert!((next - x).dot(Vec3::X) >= 0.0);
        }
    }

    #[test]
    fn bookkeeping_holds() {
        let p = problem(2000.0, BoundaryFunction::split_cos_default());
        let cfg = SolverConfig::default();
        for w in 0..200 {
            let r = vwost_estimate(&p, Vec3::new(0.2, 0.1, 0.0), &cfg, &mut walk_rng(6, 0, w)).unwrap();
            assert_eq!(r.stats.empty_balls, r.stats.steps);
            assert!(r.value.abs() <= 1.0);
        }
    }
}
