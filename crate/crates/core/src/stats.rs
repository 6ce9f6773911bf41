//! Monte Carlo result envelope, interval estimates and reproducible RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Result of a Monte Carlo estimate. `extra` carries labelled side quantities
/// such as postselection rates.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EstimatorReport {
    pub shots: u64,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
    pub extra: Vec<(String, f64)>,
}

impl EstimatorReport {
    pub fn exact(value: f64, seed: u64) -> Self {
        EstimatorReport { shots: 0, mean: value, std_error: 0.0, seed, extra: Vec::new() }
    }

    /// Whether `target` lies within `k` standard errors of the mean. A
    /// zero-variance estimate must match to rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let tol = (k * self.std_error).max(1e-12 * target.abs().max(1.0));
        (self.mean - target).abs() <= tol
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Running sums in a fixed order, so results are bit-reproducible.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn report(&self, seed: u64) -> EstimatorReport {
        EstimatorReport {
            shots: self.n,
            mean: self.mean(),
            std_error: self.std_error(),
            seed,
            extra: Vec::new(),
        }
    }
}

/// Independent stream for work item `index` under a master seed.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Shots are grouped into fixed-size chunks with one RNG stream each; the
/// chunking is independent of the thread count.
pub const CHUNK: u64 = 4096;

pub fn chunk_ranges(total: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        out.push((start, end));
        start = end;
    }
    out
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub const Z95: f64 = 1.959963984540054;

pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}
