use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ensemble_average, homogenized_estimate, vwos_estimate, vwost_estimate, walk_rng, wos_estimate, wost_estimate,
    Estimate, Problem, SolverConfig, SphereBvh, WalkResult, WalkStats,
};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wos,
    Vwos,
    Wost,
    Vwost,
    Ea,
    Homogenized,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Wos, Method::Vwos, Method::Wost, Method::Vwost, Method::Ea, Method::Homogenized];

    pub fn name(self) -> &'static str {
        match self {
            Method::Wos => "wos",
            Method::Vwos => "vwos",
            Method::Wost => "wost",
            Method::Vwost => "vwost",
            Method::Ea => "ea",
            Method::Homogenized => "homogenized",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Estimate at one point plus the stats of every walk that fed it.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub estimate: Estimate,
    pub walks: Vec<WalkStats>,
}

impl PointResult {
    fn from_walks(walks: &[WalkResult]) -> Self {
        let values: Vec<f64> = walks.iter().map(|w| w.value).collect();
        let truncated = walks.iter().filter(|w| w.stats.truncated).count() as u64;
        PointResult {
            estimate: Estimate::from_values(&values, truncated),
            walks: walks.iter().map(|w| w.stats).collect(),
        }
    }

    pub fn mean_of(&self, f: impl Fn(&WalkStats) -> u64) -> f64 {
        if self.walks.is_empty() {
            return 0.0;
        }
        self.walks.iter().map(|w| f(w) as f64).sum::<f64>() / self.walks.len() as f64
    }
}

/// Rejects method and problem combinations that make no sense, before any
/// walk runs.
pub fn check_method(problem: &Problem, method: Method, cfg: &SolverConfig, configs: u64) -> Result<()> {
    cfg.validate(problem.radius())?;
    let neumann = problem.particle_bc.is_neumann();
    match method {
        Method::Vwos if neumann => Err(Error::Config("vwos needs Dirichlet particles; use vwost".into())),
        Method::Vwost | Method::Wost if !neumann => {
            Err(Error::Config(format!("{method} needs zero-Neumann particles")))
        }
        Method::Homogenized if problem.pbm.density.homogeneous_value().is_none() => {
            Err(Error::Config("homogenization needs a constant density".into()))
        }
        Method::Homogenized if !problem.particles_absorb_to_zero() => {
            Err(Error::Config("homogenization needs zero Dirichlet data on particles".into()))
        }
        Method::Ea if configs == 0 || !cfg.n_walks.is_multiple_of(configs) => Err(Error::Config(format!(
            "walk count {} must be a positive multiple of the configuration count {configs}",
            cfg.n_walks
        ))),
        _ => Ok(()),
    }
}

/// Runs `cfg.n_walks` walks of `method` at every point. Output depends only
/// on the inputs, never on the thread count.
pub fn solve_points(
    problem: &Problem,
    method: Method,
    points: &[Vec3],
    cfg: &SolverConfig,
    configs: u64,
) -> Result<Vec<PointResult>> {
    check_method(problem, method, cfg, configs)?;
    if method == Method::Ea {
        return ensemble_average(problem, points, configs, cfg.n_walks / configs, cfg);
    }
    let n = cfg.n_walks;
    let empty = SphereBvh::build(&[]);
    let walks: Vec<WalkResult> = (0..points.len() as u64 * n)
        .into_par_iter()
        .map(|k| {
            let (i, w) = (k / n, k % n);
            let x = points[i as usize];
            let mut rng = walk_rng(cfg.seed, i, w);
            match method {
                Method::Wos => Ok(wos_estimate(problem, None, x, cfg, &mut rng)),
                Method::Wost => wost_estimate(problem, &empty, x, cfg, &mut rng),
                Method::Vwos => vwos_estimate(problem, x, cfg, &mut rng),
                Method::Vwost => vwost_estimate(problem, x, cfg, &mut rng),
                Method::Homogenized => homogenized_estimate(problem, x, cfg, &mut rng),
                Method::Ea => unreachable!(),
            }
        })
        .collect::<Result<_>>()?;
    Ok(walks.chunks(n as usize).map(PointResult::from_walks).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityField, PbmParams};
    use crate::geometry::MediumShape;
    use crate::solvers::{BoundaryFunction, ParticleCondition};

    fn problem(bc: ParticleCondition) -> Problem {
        let ball = MediumShape::sphere(Vec3::ZERO, 1.0).unwrap();
        let pbm = PbmParams::new(DensityField::constant(100.0, ball.clone()).unwrap(), 0.05).unwrap();
        Problem::new(ball, BoundaryFunction::Linear { axis: 0, scale: 0.5, offset: 0.5 }, pbm, bc).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("walk".parse::<Method>().is_err());
    }

    #[test]
    fn incompatible_methods_fail_early() {
        let cfg = SolverConfig::default();
        let d = problem(ParticleCondition::dirichlet(BoundaryFunction::constant(0.0)));
        let n = problem(ParticleCondition::NeumannZero);
        assert!(check_method(&d, Method::Vwost, &cfg, 1).is_err());
        assert!(check_method(&d, Method::Wost, &cfg, 1).is_err());
        assert!(check_method(&n, Method::Vwos, &cfg, 1).is_err());
        assert!(check_method(&n, Method::Homogenized, &cfg, 1).is_err());
        assert!(check_method(&d, Method::Ea, &cfg, 3).is_err());
        assert!(check_method(&d, Method::Ea, &cfg, 4).is_ok());
        let bad_eps = SolverConfig { eps: 0.01, ..cfg };
        assert!(check_method(&d, Method::Vwos, &bad_eps, 1).is_err());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let p = problem(ParticleCondition::dirichlet(BoundaryFunction::constant(0.0)));
        let cfg = SolverConfig { n_walks: 64, ..Default::default() };
        let pts = [Vec3::ZERO, Vec3::new(0.4, 0.1, 0.0), Vec3::new(-0.3, 0.3, 0.2)];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| solve_points(&p, Method::Vwos, &pts, &cfg, 1).unwrap())
        };
        let a = run(1);
        let b = run(4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.estimate.mean.to_bits(), y.estimate.mean.to_bits());
            assert_eq!(x.estimate.variance_of_mean.to_bits(), y.estimate.variance_of_mean.to_bits());
            assert_eq!(x.walks, y.walks);
        }
    }
}
