//! Empirical 1-Wasserstein distance between equal-size samples of
//! configurations under the graph metric, via exact optimal assignment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnyConfig;
use crate::error::{invalid, Error, Result};
use crate::rng::{replica_rng, SimRng};
use crate::stats::RunningStats;

/// Largest matrix the assignment solver accepts.
pub const MAX_ASSIGNMENT_SIZE: usize = 512;

/// Default number of bootstrap repetitions.
pub const BOOTSTRAP_REPETITIONS: usize = 50;

/// An optimal assignment: row `i` is matched to column `permutation[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub total: f64,
}

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method
/// with row and column potentials, `O(n^3)`).
pub fn assignment_solve(cost: &[Vec<f64>]) -> Result<Assignment> {
    let n = cost.len();
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(invalid(format!("{n} x {n} exceeds the assignment limit {MAX_ASSIGNMENT_SIZE}")));
    }
    if cost.iter().any(|row| row.len() != n) {
        return Err(invalid("cost matrix must be square"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(invalid("cost matrix entries must be finite"));
    }
    // 1-based arrays; column 0 is a virtual column holding the row being added
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        way[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0; n];
    for j in 1..=n {
        permutation[owner[j] - 1] = j - 1;
    }
    let total = permutation.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment { permutation, total })
}

/// A nonempty sample of configurations of one kind, with uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    configs: Vec<AnyConfig>,
}

impl SampleSet {
    pub fn new(configs: Vec<AnyConfig>) -> Result<Self> {
        let first = configs.first().ok_or_else(|| invalid("sample set is empty"))?;
        let kind = std::mem::discriminant(first);
        if configs.iter().any(|c| std::mem::discriminant(c) != kind) {
            return Err(Error::VariantMismatch);
        }
        Ok(Self { configs })
    }

    pub fn configs(&self) -> &[AnyConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

impl<C: Into<AnyConfig>> FromIterator<C> for SampleSet {
    /// Collects configurations; panics on an empty or mixed sample.
    fn from_iter<I: IntoIterator<Item = C>>(iter: I) -> Self {
        SampleSet::new(iter.into_iter().map(Into::into).collect()).expect("valid sample set")
    }
}

/// Empirical `W_1` with its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Estimate {
    pub w1: f64,
    pub se: f64,
    pub n: usize,
}

/// Pairwise graph distances, rows computed in parallel.
pub fn distance_matrix(a: &SampleSet, b: &SampleSet) -> Result<Vec<Vec<f64>>> {
    a.configs
        .par_iter()
        .map(|x| b.configs.iter().map(|y| x.graph_distance(y).map(|d| d as f64)).collect())
        .collect()
}

/// Optimal transport cost between the uniform laws on `a` and `b`, with a
/// bootstrap standard error from `bootstrap` resamplings of both samples
/// (0 disables the bootstrap).
pub fn empirical_w1(a: &SampleSet, b: &SampleSet, bootstrap: usize, seed: u64) -> Result<W1Estimate> {
    let n = a.len();
    if b.len() != n {
        return Err(invalid(format!("sample sizes differ: {} vs {}", n, b.len())));
    }
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(invalid(format!("sample size {n} exceeds {MAX_ASSIGNMENT_SIZE}")));
    }
    let dist = distance_matrix(a, b)?;
    let w1 = assignment_solve(&dist)?.total / n as f64;
    let replicas: Vec<f64> = (0..bootstrap as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng: SimRng = replica_rng(seed, k);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let cols: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sub: Vec<Vec<f64>> =
                rows.iter().map(|&i| cols.iter().map(|&j| dist[i][j]).collect()).collect();
            Ok(assignment_solve(&sub)?.total / n as f64)
        })
        .collect::<Result<_>>()?;
    let se = if bootstrap > 1 { replicas.into_iter().collect::<RunningStats>().std_dev() } else { 0.0 };
    Ok(W1Estimate { w1, se, n })
}
