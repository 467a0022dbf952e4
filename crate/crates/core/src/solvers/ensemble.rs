use rayon::prelude::*;

use super::{
    configuration_rng, walk_rng, wos_estimate, wost_estimate, Accumulator, Estimate, PointResult, Problem,
    SolverConfig, SphereBvh, WalkStats,
};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::pbm::{sample_configuration, ParticleConfiguration};

/// Largest expected particle count per configuration accepted by ensemble
/// averaging.
pub const MAX_EXPECTED_PARTICLES: f64 = 1e5;

pub fn expected_particle_count(problem: &Problem) -> f64 {
    problem.pbm.density.total_mass().value
}

/// Mean of one configuration's walks at one point; `None` for zero-flux
/// problems when the point is covered in that configuration.
type ConfigPoint = Option<(f64, Vec<WalkStats>)>;

fn solve_configuration(
    problem: &Problem,
    config: &ParticleConfiguration,
    index: u64,
    points: &[Vec3],
    walks_per_config: u64,
    cfg: &SolverConfig,
) -> Result<Vec<ConfigPoint>> {
    let bvh = SphereBvh::build(&config.centers);
    let neumann = problem.particle_bc.is_neumann();
    points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            if neumann && config.covers(x) {
                return Ok(None);
            }
            let mut values = Vec::with_capacity(walks_per_config as usize);
            let mut stats = Vec::with_capacity(walks_per_config as usize);
            for w in 0..walks_per_config {
                let mut rng = walk_rng(cfg.seed, i as u64, index * walks_per_config + w);
                let r = if neumann {
                    wost_estimate(problem, &bvh, x, cfg, &mut rng)?
                } else {
                    wos_estimate(problem, Some(&bvh), x, cfg, &mut rng)
                };
                values.push(r.value);
                stats.push(r.stats);
            }
            Ok(Some((Accumulator::pairwise(&values).mean, stats)))
        })
        .collect()
}

/// Ensemble averaging over `configs` freshly sampled configurations, shared by
/// all points. Configuration means are the samples of the estimate.
pub fn ensemble_average(
    problem: &Problem,
    points: &[Vec3],
    configs: u64,
    walks_per_config: u64,
    cfg: &SolverConfig,
) -> Result<Vec<PointResult>> {
    if configs == 0 || walks_per_config == 0 {
        return Err(Error::Config("ensemble averaging needs at least one configuration and one walk".into()));
    }
    let expected = expected_particle_count(problem);
    if expected > MAX_EXPECTED_PARTICLES {
        return Err(Error::Config(format!(
            "expected {expected:.0} particles per configuration; keep it under {MAX_EXPECTED_PARTICLES:.0}"
        )));
    }
    let per_config: Vec<Vec<ConfigPoint>> = (0..configs)
        .into_par_iter()
        .map(|k| {
            let mut rng = configuration_rng(cfg.seed, k);
            let config = sample_configuration(&problem.medium, &problem.pbm.density, problem.radius(), &mut rng)?;
            solve_configuration(problem, &config, k, points, walks_per_config, cfg)
        })
        .collect::<Result<_>>()?;
    Ok(combine(per_config, points.len(), walks_per_config))
}

/// Ensemble averaging over the given configurations.
pub fn ensemble_average_with(
    problem: &Problem,
    points: &[Vec3],
    configs: &[ParticleConfiguration],
    walks_per_config: u64,
    cfg: &SolverConfig,
) -> Result<Vec<PointResult>> {
    let per_config: Vec<Vec<ConfigPoint>> = configs
        .par_iter()
        .enumerate()
        .map(|(k, c)| solve_configuration(problem, c, k as u64, points, walks_per_config, cfg))
        .collect::<Result<_>>()?;
    Ok(combine(per_config, points.len(), walks_per_config))
}

fn combine(per_config: Vec<Vec<ConfigPoint>>, n_points: usize, walks_per_config: u64) -> Vec<PointResult> {
    let mut means: Vec<Vec<f64>> = vec![Vec::new(); n_points];
    let mut walks: Vec<Vec<WalkStats>> = vec![Vec::new(); n_points];
    for config in per_config {
        for (i, entry) in config.into_iter().enumerate() {
            if let Some((m, stats)) = entry {
                means[i].push(m);
                walks[i].extend(stats);
            }
        }
    }
    means
        .into_iter()
        .zip(walks)
        .map(|(m, w)| {
            let truncated = w.iter().filter(|s| s.truncated).count() as u64;
            let mut estimate = Estimate::from_values(&m, truncated);
            estimate.n_walks = m.len() as u64 * walks_per_config;
            PointResult { estimate, walks: w }
        })
        .collect()
}
