use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalPlane, SceneSpec};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solvers::{Estimate, Method, SolverConfig, WalkStats};

/// Counts in power-of-two buckets: bucket 0 holds zero, bucket `k` holds
/// `[2^(k-1), 2^k)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bucket(value: u64) -> usize {
        (u64::BITS - value.leading_zeros()) as usize
    }

    pub fn add(&mut self, value: u64) {
        let b = Self::bucket(value);
        if self.counts.len() <= b {
            self.counts.resize(b + 1, 0);
        }
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower end of the bucket holding the median sample.
    pub fn median_bucket_floor(&self) -> u64 {
        let half = self.total().div_ceil(2);
        let mut seen = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen >= half {
                return if b == 0 { 0 } else { 1 << (b - 1) };
            }
        }
        0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkHistograms {
    pub walk_length: Histogram,
    pub empty_balls: Histogram,
    pub particles: Histogram,
}

impl WalkHistograms {
    pub fn add(&mut self, w: &WalkStats) {
        self.walk_length.add(w.steps);
        self.empty_balls.add(w.empty_balls);
        self.particles.add(w.particles);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub i: usize,
    pub j: usize,
    pub x: Vec3,
    pub estimate: Estimate,
    pub mean_walk_length: f64,
    pub mean_empty_balls: f64,
    pub mean_particles: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub plane: EvalPlane,
    pub config: SolverConfig,
    /// Configurations per point for ensemble averaging, 1 otherwise.
    pub configs: u64,
    pub scene: SceneSpec,
    pub points: Vec<PointRecord>,
    pub histograms: WalkHistograms,
    pub truncated_walks: u64,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub points: usize,
    pub mae: f64,
    pub rmse: f64,
    pub max_abs: f64,
    /// Points where `|a - b| > 3 sqrt(var_a + var_b)`.
    pub z_exceed_count: usize,
}

/// Elementwise error metrics between two runs on the same grid.
pub fn compare(a: &RunReport, b: &RunReport) -> Result<Comparison> {
    if a.plane.nu != b.plane.nu || a.plane.nv != b.plane.nv {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} grid vs {}x{} grid",
            a.plane.nu, a.plane.nv, b.plane.nu, b.plane.nv
        )));
    }
    if a.points.len() != b.points.len() || a.points.iter().zip(&b.points).any(|(p, q)| (p.i, p.j) != (q.i, q.j)) {
        return Err(Error::ShapeMismatch("runs cover different in-domain points".into()));
    }
    let n = a.points.len();
    let (mut sum, mut sum2, mut max_abs, mut z) = (0.0, 0.0, 0.0f64, 0);
    for (p, q) in a.points.iter().zip(&b.points) {
        let e = (p.estimate.mean - q.estimate.mean).abs();
        sum += e;
        sum2 += e * e;
        max_abs = max_abs.max(e);
        if !p.estimate.agrees_with(&q.estimate, 3.0) {
            z += 1;
        }
    }
    let nf = n.max(1) as f64;
    Ok(Comparison { points: n, mae: sum / nf, rmse: (sum2 / nf).sqrt(), max_abs, z_exceed_count: z })
}
