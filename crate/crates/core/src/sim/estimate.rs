use alloc::vec::Vec;

use super::rng::RngStream;
use crate::error::{bail_param, Result};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub half_width_99: f64,
}

impl McEstimate {
    /// `|mean - target|` in units of the standard error (infinite when the
    /// error is zero and the target is missed).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

/// Running count, mean and sum of squared deviations; merges exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accumulator {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Accumulator { n, mean, m2 }
    }

    pub fn estimate(&self) -> Result<McEstimate> {
        if self.n < 2 {
            bail_param!("an estimate needs at least two samples, got {}", self.n);
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        let stderr = libm::sqrt(var / self.n as f64);
        Ok(McEstimate { mean: self.mean, stderr, n_samples: self.n, half_width_99: Z_99 * stderr })
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut a = Accumulator::default();
        iter.into_iter().for_each(|x| a.push(x));
        a
    }
}

/// Runs `n_replicas` independent replicas, replica `i` on `base.replica(i)`,
/// and estimates the mean of each output coordinate.
pub fn run_replicas<F>(n_replicas: u64, base: &RngStream, mut task: F) -> Result<Vec<McEstimate>>
where
    F: FnMut(&RngStream) -> Result<Vec<f64>>,
{
    if n_replicas < 2 {
        bail_param!("need at least two replicas, got {n_replicas}");
    }
    let mut acc: Vec<Accumulator> = Vec::new();
    for i in 0..n_replicas {
        let out = task(&base.replica(i))?;
        if acc.is_empty() {
            acc = alloc::vec![Accumulator::default(); out.len()];
        }
        for (a, x) in acc.iter_mut().zip(out) {
            a.push(x);
        }
    }
    acc.iter().map(Accumulator::estimate).collect()
}

/// Scalar form of [`run_replicas`].
pub fn run_replicas_scalar<F>(n_replicas: u64, base: &RngStream, mut task: F) -> Result<McEstimate>
where
    F: FnMut(&RngStream) -> Result<f64>,
{
    Ok(run_replicas(n_replicas, base, |s| task(s).map(|x| alloc::vec![x]))?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_outputs_have_zero_error() {
        let e = run_replicas_scalar(2, &RngStream::default(), |_| Ok(0.25)).unwrap();
        assert_eq!((e.mean, e.stderr, e.n_samples), (0.25, 0.0, 2));
    }

    #[test]
    fn needs_two_replicas() {
        assert!(run_replicas_scalar(1, &RngStream::default(), |_| Ok(1.0)).is_err());
    }

    #[test]
    fn merge_matches_pooled() {
        let xs: Vec<f64> = (0..100).map(|i| libm::sin(i as f64) * 3.0 + 1.0).collect();
        let whole: Accumulator = xs.iter().copied().collect();
        let a: Accumulator = xs[..37].iter().copied().collect();
        let b: Accumulator = xs[37..].iter().copied().collect();
        let m = a.merge(&b);
        assert_eq!(m.n, whole.n);
        assert!((m.mean - whole.mean).abs() <= 1e-15 * whole.mean.abs());
        assert!((m.m2 - whole.m2).abs() <= 1e-12 * whole.m2);
    }
}
