use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub critical: f64,
    pub n: usize,
    pub passed: bool,
}

/// Asymptotic Kolmogorov coefficient `c(α)`, with the usual table values.
pub fn ks_coefficient(alpha: f64) -> f64 {
    match alpha {
        0.01 => 1.628,
        0.05 => 1.358,
        0.10 => 1.224,
        a => (-0.5 * (a / 2.0).ln()).sqrt(),
    }
}

/// One-sample Kolmogorov–Smirnov test of sorted `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<KsResult> {
    let n = samples.len();
    if n < 100 {
        return Err(Error::InvalidInput(format!("KS test needs at least 100 samples, got {n}")));
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("KS samples must be sorted ascending".into()));
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let critical = ks_coefficient(alpha) / nf.sqrt();
    Ok(KsResult { d, critical, n, passed: d < critical })
}

/// Two-sample Kolmogorov–Smirnov test; both inputs sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    let (n, m) = (a.len(), b.len());
    if n < 100 || m < 100 {
        return Err(Error::InvalidInput("KS test needs at least 100 samples per side".into()));
    }
    if a.windows(2).chain(b.windows(2)).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("KS samples must be sorted ascending".into()));
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let critical = ks_coefficient(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    Ok(KsResult { d, critical, n: n + m, passed: d < critical })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

/// Pearson chi-square test of `counts` against equal expected frequencies.
pub fn chi_square_uniform(counts: &[u64], alpha: f64) -> ChiSquareResult {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((counts.len() - 1) as f64).unwrap().inverse_cdf(1.0 - alpha);
    ChiSquareResult { statistic, critical, passed: statistic < critical }
}
