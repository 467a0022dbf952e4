//! Scene files, evaluation grids, output files and the validation suites.

mod ks;
mod output;
mod plane;
mod report;
mod run;
mod scene;
pub mod validate;

pub use ks::{chi_square_uniform, ks_coefficient, ks_statistic, ks_two_sample, ChiSquareResult, KsResult};
pub use output::{csv_string, pfm_bytes, ppm_bytes, CSV_HEADER};
pub use plane::EvalPlane;
pub use report::{compare, Comparison, Histogram, PointRecord, RunReport, WalkHistograms};
pub use run::{evaluate, run, write_outputs};
pub use scene::{DensitySpec, SceneSpec};
pub use validate::{validate, Suite, SuiteReport, Verdict};
