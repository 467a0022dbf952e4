use std::path::Path;
use std::time::Instant;

use super::output::{csv_string, pfm_bytes, ppm_bytes, write_bytes};
use super::report::{PointRecord, RunReport, WalkHistograms};
use super::{EvalPlane, SceneSpec};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solvers::{check_method, solve_points, Method, SolverConfig};

/// Evaluates the scene on `plane` without touching the filesystem.
///
/// `threads = 0` uses rayon's default pool size.
pub fn evaluate(
    scene: &SceneSpec,
    method: Method,
    plane: &EvalPlane,
    cfg: &SolverConfig,
    configs: u64,
    threads: usize,
) -> Result<RunReport> {
    let problem = scene.problem()?;
    check_method(&problem, method, cfg, configs)?;
    let grid = plane.domain_points(&problem.medium);
    let points: Vec<Vec3> = grid.iter().map(|&(_, _, x)| x).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let results = pool.install(|| solve_points(&problem, method, &points, cfg, configs))?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    let mut histograms = WalkHistograms::default();
    let mut records = Vec::with_capacity(results.len());
    for (&(i, j, x), r) in grid.iter().zip(&results) {
        r.walks.iter().for_each(|w| histograms.add(w));
        records.push(PointRecord {
            i,
            j,
            x,
            estimate: r.estimate,
            mean_walk_length: r.mean_of(|w| w.steps),
            mean_empty_balls: r.mean_of(|w| w.empty_balls),
            mean_particles: r.mean_of(|w| w.particles),
        });
    }
    Ok(RunReport {
        method,
        plane: *plane,
        config: *cfg,
        configs: if method == Method::Ea { configs } else { 1 },
        scene: scene.clone(),
        truncated_walks: records.iter().map(|p| p.estimate.truncated).sum(),
        points: records,
        histograms,
        threads: pool.current_num_threads(),
        wall_clock_seconds,
    })
}

/// Writes `solution.csv`, `solution.pfm`, `preview.ppm` and `report.json`
/// into `out_dir`.
pub fn write_outputs(report: &RunReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (lo, hi) = report.scene.problem()?.data_bounds();
    write_bytes(&out_dir.join("solution.csv"), csv_string(report).as_bytes())?;
    write_bytes(&out_dir.join("solution.pfm"), &pfm_bytes(report))?;
    write_bytes(&out_dir.join("preview.ppm"), &ppm_bytes(report, lo, hi))?;
    report.save(&out_dir.join("report.json"))
}

pub fn run(
    scene: &SceneSpec,
    method: Method,
    plane: &EvalPlane,
    cfg: &SolverConfig,
    configs: u64,
    out_dir: &Path,
    threads: usize,
) -> Result<RunReport> {
    let report = evaluate(scene, method, plane, cfg, configs, threads)?;
    write_outputs(&report, out_dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::compare;
    use crate::solvers::BoundaryFunction;

    fn scene(lambda: f64, g: BoundaryFunction) -> SceneSpec {
        let text = format!(
            r#"
particle_radius = 0.05
[medium]
primitives = [{{ type = "sphere", center = [0.0, 0.0, 0.0], radius = 1.0 }}]
[density]
type = "constant"
lambda = {lambda:?}
[medium_bc]
type = "linear"
axis = 0
scale = 0.5
offset = 0.5
[particle_bc]
type = "dirichlet"
data = {{ type = "constant", value = 0.0 }}
"#
        );
        let mut s = SceneSpec::parse(&text).unwrap();
        s.medium_bc = g;
        s
    }

    fn plane() -> EvalPlane {
        EvalPlane::parse("-1,-1,0;2,0,0;0,2,0;6,6").unwrap()
    }

    #[test]
    fn constant_data_gives_constant_grid() {
        let mut s = scene(50.0, BoundaryFunction::constant(0.7));
        s.particle_bc = crate::solvers::ParticleCondition::dirichlet(BoundaryFunction::constant(0.7));
        let cfg = SolverConfig { n_walks: 16, ..Default::default() };
        let r = evaluate(&s, Method::Vwos, &plane(), &cfg, 1, 2).unwrap();
        assert!(!r.points.is_empty());
        for p in &r.points {
            assert_eq!(p.estimate.mean, 0.7);
            assert_eq!(p.estimate.variance_of_mean, 0.0);
        }
        assert_eq!(r.histograms.walk_length.total(), 16 * r.points.len() as u64);
    }

    #[test]
    fn files_are_written_and_deterministic() {
        let s = scene(30.0, BoundaryFunction::Linear { axis: 0, scale: 0.5, offset: 0.5 });
        let cfg = SolverConfig { n_walks: 8, seed: 3, ..Default::default() };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run(&s, Method::Vwos, &plane(), &cfg, 1, a.path(), 1).unwrap();
        let rb = run(&s, Method::Vwos, &plane(), &cfg, 1, b.path(), 3).unwrap();
        for f in ["solution.csv", "solution.pfm", "preview.ppm"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let back = RunReport::load(&a.path().join("report.json")).unwrap();
        assert_eq!(back.points, ra.points);
        let c = compare(&ra, &rb).unwrap();
        assert_eq!((c.mae, c.rmse, c.max_abs, c.z_exceed_count), (0.0, 0.0, 0.0, 0));

        let pfm = std::fs::read(a.path().join("solution.pfm")).unwrap();
        assert!(pfm.starts_with(b"Pf\n6 6\n-1.0\n"));
        assert_eq!(pfm.len(), "Pf\n6 6\n-1.0\n".len() + 36 * 4);
        let csv = std::fs::read_to_string(a.path().join("solution.csv")).unwrap();
        let walks: u64 = csv.lines().skip(1).map(|l| l.split(',').nth(7).unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(walks, 8 * ra.points.len() as u64);
    }

    #[test]
    fn compare_reports_shift_and_shape() {
        let s = scene(30.0, BoundaryFunction::Linear { axis: 0, scale: 0.5, offset: 0.5 });
        let cfg = SolverConfig { n_walks: 8, ..Default::default() };
        let a = evaluate(&s, Method::Wos, &plane(), &cfg, 1, 1).unwrap();
        let mut b = a.clone();
        b.points[2].estimate.mean += 0.25;
        let c = compare(&a, &b).unwrap();
        assert_eq!(c.max_abs, 0.25);
        let mut other = a.clone();
        other.plane.nu = 5;
        assert!(matches!(compare(&a, &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn incompatible_method_fails_before_compute() {
        let s = scene(30.0, BoundaryFunction::constant(1.0));
        let err = evaluate(&s, Method::Vwost, &plane(), &SolverConfig::default(), 1, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
