use serde::{Deserialize, Serialize};

/// Point estimate of a stochastic quantity with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub stderr: f64,
    /// Number of replications behind the estimate.
    pub n: u64,
    /// Master seed the estimate was derived from.
    pub seed: u64,
    /// Method descriptor, e.g. `"plain-mc"` or `"tilted"`.
    pub meta: String,
}

impl EstimateWithCI {
    pub fn exact(value: f64, meta: impl Into<String>) -> Self {
        Self { point: value, stderr: 0.0, n: 0, seed: 0, meta: meta.into() }
    }

    /// Estimate from a count of successes among `n` Bernoulli trials.
    pub fn from_counts(successes: u64, n: u64, seed: u64, meta: impl Into<String>) -> Self {
        let p = successes as f64 / n as f64;
        Self { point: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), n, seed, meta: meta.into() }
    }

    pub fn from_moments(m: &Moments, seed: u64, meta: impl Into<String>) -> Self {
        Self { point: m.mean(), stderr: m.stderr(), n: m.count(), seed, meta: meta.into() }
    }

    pub fn relative_stderr(&self) -> f64 {
        if self.point == 0.0 {
            f64::INFINITY
        } else {
            self.stderr / self.point.abs()
        }
    }

    /// `|self - other| / sqrt(se1^2 + se2^2)`.
    pub fn z_distance(&self, other: &EstimateWithCI) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        let diff = (self.point - other.point).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }

    pub fn lower(&self, z: f64) -> f64 {
        self.point - z * self.stderr
    }

    pub fn upper(&self, z: f64) -> f64 {
        self.point + z * self.stderr
    }
}

/// Streaming mean/variance accumulator (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let na = self.n as f64;
        let nb = other.n as f64;
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a Moments>) -> Moments {
        let mut acc = Moments::default();
        for p in parts {
            acc.merge(p);
        }
        acc
    }
}
