//! Small statistical helpers shared by the estimators and their checks.

use serde::{Deserialize, Serialize};

/// Streaming mean/variance accumulator (Welford). Merging is associative,
/// so replica ensembles can be reduced in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Histogram of nonnegative integer observations.
pub fn histogram<I: IntoIterator<Item = usize>>(values: I) -> Vec<u64> {
    let mut counts: Vec<u64> = Vec::new();
    for v in values {
        if v >= counts.len() {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
    }
    counts
}

/// Total variation distance between an empirical histogram and a pmf
/// (mass of the pmf beyond its support vector counts as zero there).
pub fn total_variation(counts: &[u64], pmf: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let len = counts.len().max(pmf.len());
    let mut acc = 0.0;
    for k in 0..len {
        let emp = counts.get(k).copied().unwrap_or(0) as f64 / n;
        let p = pmf.get(k).copied().unwrap_or(0.0);
        acc += (emp - p).abs();
    }
    0.5 * acc
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical coefficient `c(level)` with
/// `P(sqrt(n) D > c) ~ level`.
pub fn ks_critical_coefficient(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Critical value for the two-sample statistic at the given level.
pub fn ks_two_sample_critical(na: usize, nb: usize, level: f64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    ks_critical_coefficient(level) * ((na + nb) / (na * nb)).sqrt()
}

/// Critical value for the one-sample statistic at the given level.
pub fn ks_one_sample_critical(n: usize, level: f64) -> f64 {
    ks_critical_coefficient(level) / (n as f64).sqrt()
}
