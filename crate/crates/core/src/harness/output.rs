use std::fmt::Write as _;
use std::path::Path;

use super::RunReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "i,j,x,y,z,mean,variance_of_mean,n_walks,mean_walk_length,mean_E,mean_P,truncated";

pub fn csv_string(report: &RunReport) -> String {
    let mut out = String::with_capacity(64 * (report.points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &report.points {
        let e = &p.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.i,
            p.j,
            p.x.x,
            p.x.y,
            p.x.z,
            e.mean,
            e.variance_of_mean,
            e.n_walks,
            p.mean_walk_length,
            p.mean_empty_balls,
            p.mean_particles,
            e.truncated
        );
    }
    out
}

/// Mean values on the full grid, row `j` major; `None` outside the domain.
fn grid_values(report: &RunReport) -> Vec<Option<f64>> {
    let (nu, nv) = (report.plane.nu, report.plane.nv);
    let mut grid = vec![None; nu * nv];
    for p in &report.points {
        grid[p.j * nu + p.i] = Some(p.estimate.mean);
    }
    grid
}

/// Grayscale little-endian PFM, bottom row (`j = 0`) first. Points outside
/// the domain are written as 0.
pub fn pfm_bytes(report: &RunReport) -> Vec<u8> {
    let (nu, nv) = (report.plane.nu, report.plane.nv);
    let mut out = format!("Pf\n{nu} {nv}\n-1.0\n").into_bytes();
    for v in grid_values(report) {
        out.extend_from_slice(&(v.unwrap_or(0.0) as f32).to_le_bytes());
    }
    out
}

/// Binary PPM preview mapping `[lo, hi]` linearly to black..white, top row
/// first. Points outside the domain are dark red.
pub fn ppm_bytes(report: &RunReport, lo: f64, hi: f64) -> Vec<u8> {
    let (nu, nv) = (report.plane.nu, report.plane.nv);
    let grid = grid_values(report);
    let mut out = format!("P6\n{nu} {nv}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    for j in (0..nv).rev() {
        for i in 0..nu {
            match grid[j * nu + i] {
                Some(v) => {
                    let g = (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8;
                    out.extend_from_slice(&[g, g, g]);
                }
                None => out.extend_from_slice(&[64, 0, 0]),
            }
        }
    }
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
