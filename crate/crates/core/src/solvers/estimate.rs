use serde::{Deserialize, Serialize};

/// Single-pass mean and centered second moment, mergeable in any tree.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(a: Accumulator, b: Accumulator) -> Accumulator {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        let mean = a.mean + delta * (b.n as f64 / n as f64);
        let m2 = a.m2 + b.m2 + delta * delta * (a.n as f64 * b.n as f64 / n as f64);
        Accumulator { n, mean, m2 }
    }

    /// Reduces `values` with a fixed balanced merge tree, so the result depends
    /// only on the order of `values`.
    pub fn pairwise(values: &[f64]) -> Accumulator {
        match values.len() {
            0 => Accumulator::default(),
            1 => Accumulator { n: 1, mean: values[0], m2: 0.0 },
            n => {
                let (l, r) = values.split_at(n / 2);
                Accumulator::merge(Self::pairwise(l), Self::pairwise(r))
            }
        }
    }

    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance_of_mean: f64,
    pub n_walks: u64,
    pub truncated: u64,
}

impl Estimate {
    /// Estimate from i.i.d. per-walk values.
    pub fn from_values(values: &[f64], truncated: u64) -> Self {
        let acc = Accumulator::pairwise(values);
        Estimate {
            mean: acc.mean,
            variance_of_mean: if acc.n > 0 { acc.sample_variance() / acc.n as f64 } else { 0.0 },
            n_walks: acc.n,
            truncated,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.variance_of_mean.sqrt()
    }

    /// `|a - b| <= k * sqrt(var_a + var_b)`
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * (self.variance_of_mean + other.variance_of_mean).sqrt()
    }
}

/// Per-walk bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStats {
    pub steps: u64,
    pub empty_balls: u64,
    pub particles: u64,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkResult {
    pub value: f64,
    pub stats: WalkStats,
}
