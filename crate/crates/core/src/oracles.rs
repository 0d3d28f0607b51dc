//! Exact reference laws and independent samplers.
//!
//! These are the ground truth the dynamics are checked against: the law of
//! the pair count of each bridge, exact samplers of the bridges and of the
//! discretization scheme, an independence Metropolis-Hastings sampler for
//! walks with level-dependent rates, and the solution of the Stein equation
//! of the integer birth-death chain.

use rand::Rng;
use rayon::prelude::*;

use crate::chain::log_density_m;
use crate::config::{AnyConfig, HypercubeConfig, LatticeConfig};
use crate::error::{invalid, Error, Result};
use crate::rates::JumpRates;
use crate::rng::{open01, replica_rng, SimRng};
use crate::stats::RunningStats;

/// Truncation target for integer laws.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Modified Bessel function of the first kind of order zero, by its power
/// series `sum_k (x/2)^{2k} / (k!)^2`. Even in `x`. Returns infinity once
/// the value overflows (`|x|` beyond about 713).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum || !sum.is_finite() {
            return sum;
        }
    }
}

/// Probability mass function on `{0, 1, ..., n_max}` with a certified bound
/// on the mass beyond `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerLaw {
    pub pmf: Vec<f64>,
    pub tail_bound: f64,
}

impl IntegerLaw {
    /// Builds a law from unnormalized weights `w(0) = 1`,
    /// `w(n+1) = w(n) * ratio(n)`, where `ratio` is eventually decreasing to
    /// zero. Truncates once the geometric bound on the remaining mass drops
    /// below [`TAIL_TOLERANCE`].
    fn from_ratios(ratio: impl Fn(usize) -> f64) -> Self {
        let mut weights = vec![1.0];
        let mut total = 1.0;
        loop {
            let n = weights.len() - 1;
            let next = weights[n] * ratio(n);
            let q = ratio(n + 1);
            // every later ratio is at most q once the ratios decrease
            if q < 1.0 && ratio(n + 2) <= q {
                let tail = next / (1.0 - q);
                if tail < TAIL_TOLERANCE * total {
                    let pmf = weights.iter().map(|w| w / total).collect();
                    return IntegerLaw { pmf, tail_bound: tail / total };
                }
            }
            weights.push(next);
            total += next;
        }
    }

    /// Law of `n` with `P(n) ∝ lambda^n / (n!)^2`, the Poisson pair
    /// conditioned on the diagonal.
    pub fn poisson_diag(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self::from_ratios(|n| lambda / ((n + 1) * (n + 1)) as f64))
    }

    /// Law of the pair count `m` of a hypercube bridge,
    /// `P(m) ∝ alpha^{2m} / (2m)!`.
    pub fn hypercube_pairs(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        let a2 = alpha * alpha;
        Ok(Self::from_ratios(|m| a2 / ((2 * m + 1) * (2 * m + 2)) as f64))
    }

    /// Point mass at `k`.
    pub fn dirac(k: usize) -> Self {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        IntegerLaw { pmf, tail_bound: 0.0 }
    }

    /// The law of `n + k`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut pmf = vec![0.0; k];
        pmf.extend_from_slice(&self.pmf);
        IntegerLaw { pmf, tail_bound: self.tail_bound }
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, n: usize) -> f64 {
        self.pmf.iter().take(n + 1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (n, p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return n;
            }
        }
        self.n_max()
    }
}

/// `P(n) = lambda^n / ((n!)^2 I_0(2 sqrt(lambda)))`.
pub fn poisson_diag_pmf(lambda: f64, n: u64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let log_p = n as f64 * lambda.ln() - 2.0 * log_fact;
    Ok(log_p.exp() / bessel_i0(2.0 * lambda.sqrt()))
}

/// Exact 1-Wasserstein distance between two integer laws, with the
/// truncation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegerW1 {
    pub value: f64,
    pub tail_bound: f64,
}

/// `W_1` on the integers: the `L^1` distance of the CDFs over the joint
/// truncation range.
pub fn exact_w1_integer(a: &IntegerLaw, b: &IntegerLaw) -> Result<IntegerW1> {
    if a.tail_bound > TAIL_TOLERANCE || b.tail_bound > TAIL_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "truncation tails {} and {} exceed {TAIL_TOLERANCE}",
            a.tail_bound, b.tail_bound
        )));
    }
    let top = a.n_max().max(b.n_max());
    let (mut fa, mut fb, mut value) = (0.0, 0.0, 0.0);
    for n in 0..top {
        fa += a.prob(n);
        fb += b.prob(n);
        value += (fa - fb).abs();
    }
    Ok(IntegerW1 { value, tail_bound: a.tail_bound + b.tail_bound })
}

/// Sorted i.i.d. uniform times on (0, 1).
fn uniform_times(k: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..k).map(|_| open01(rng)).collect();
    ts.sort_by(f64::total_cmp);
    ts
}

/// The bridges with an exact sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BridgeLaw {
    /// Walk on `{0, 1}` flipping at rate `alpha`.
    Hypercube { alpha: f64 },
    /// Walk on `Z` with up rate `j_plus` and down rate `j_minus`; the bridge
    /// depends only on the product.
    Lattice { j_plus: f64, j_minus: f64 },
}

/// Exact sampler of a bridge: the conditioned count, then i.i.d. uniform
/// times.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    law: BridgeLaw,
    count: IntegerLaw,
}

impl BridgeSampler {
    pub fn new(law: BridgeLaw) -> Result<Self> {
        let count = match law {
            BridgeLaw::Hypercube { alpha } => IntegerLaw::hypercube_pairs(alpha)?,
            BridgeLaw::Lattice { j_plus, j_minus } => {
                if !(j_plus > 0.0 && j_minus > 0.0) {
                    return Err(invalid("lattice rates must be positive"));
                }
                IntegerLaw::poisson_diag(j_plus * j_minus)?
            }
        };
        Ok(Self { law, count })
    }

    /// Law of the number of pairs.
    pub fn pair_law(&self) -> &IntegerLaw {
        &self.count
    }

    pub fn sample(&self, rng: &mut SimRng) -> AnyConfig {
        match self.law {
            BridgeLaw::Hypercube { .. } => AnyConfig::Hypercube(self.sample_hypercube(rng)),
            BridgeLaw::Lattice { .. } => AnyConfig::Lattice(self.sample_lattice(rng)),
        }
    }

    fn sample_hypercube(&self, rng: &mut SimRng) -> HypercubeConfig {
        let m = self.count.sample(rng);
        HypercubeConfig::new(uniform_times(2 * m, rng)).expect("continuous draws are distinct")
    }

    fn sample_lattice(&self, rng: &mut SimRng) -> LatticeConfig {
        let m = self.count.sample(rng);
        let up = uniform_times(m, rng);
        let down = uniform_times(m, rng);
        LatticeConfig::new(up, down).expect("continuous draws are distinct")
    }

    /// `n` independent draws; draw `k` uses stream `k` of `seed`.
    pub fn sample_many(&self, n: usize, seed: u64) -> Vec<AnyConfig> {
        (0..n as u64)
            .into_par_iter()
            .map(|k| self.sample(&mut replica_rng(seed, k)))
            .collect()
    }
}

/// One exact bridge draw from `seed`.
pub fn sample_bridge_exact(law: BridgeLaw, seed: u64) -> Result<AnyConfig> {
    Ok(BridgeSampler::new(law)?.sample(&mut replica_rng(seed, 0)))
}

/// Exact draw from the bridge of the scheme with `N` blocks, by rejection:
/// each block jumps up or down with probability `1/N` each at a uniform
/// time inside the block; accept when the jumps sum to zero. Returns the
/// configuration and the number of attempts used.
pub fn sample_scheme_bridge_counted(n_blocks: usize, rng: &mut SimRng) -> Result<(LatticeConfig, u64)> {
    if n_blocks < 3 {
        return Err(invalid(format!("the scheme needs N >= 3, got {n_blocks}")));
    }
    let p = 1.0 / n_blocks as f64;
    let mut signs = vec![0i8; n_blocks];
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut sum = 0i64;
        for sign in signs.iter_mut() {
            let u: f64 = rng.random();
            *sign = if u < p { 1 } else if u < 2.0 * p { -1 } else { 0 };
            sum += *sign as i64;
        }
        if sum != 0 {
            continue;
        }
        let (mut up, mut down) = (Vec::new(), Vec::new());
        for (j, &sign) in signs.iter().enumerate() {
            if sign != 0 {
                let t = (j as f64 + open01(rng)) * p;
                if sign > 0 { up.push(t) } else { down.push(t) }
            }
        }
        return Ok((LatticeConfig::new(up, down)?, attempts));
    }
}

pub fn sample_scheme_bridge(n_blocks: usize, rng: &mut SimRng) -> Result<LatticeConfig> {
    Ok(sample_scheme_bridge_counted(n_blocks, rng)?.0)
}

/// One exact scheme-bridge draw from `seed`.
pub fn sample_scheme_bridge_exact(n_blocks: usize, seed: u64) -> Result<LatticeConfig> {
    sample_scheme_bridge(n_blocks, &mut replica_rng(seed, 0))
}

/// `n` independent scheme-bridge draws; draw `k` uses stream `k` of `seed`.
pub fn sample_scheme_many(n_blocks: usize, n: usize, seed: u64) -> Result<Vec<LatticeConfig>> {
    (0..n as u64)
        .into_par_iter()
        .map(|k| sample_scheme_bridge(n_blocks, &mut replica_rng(seed, k)))
        .collect()
}

/// Burn-in and thinning of the Metropolis-Hastings sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhSettings {
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for MhSettings {
    fn default() -> Self {
        MhSettings { burn_in: 1000, thinning: 10 }
    }
}

/// Output of one Metropolis-Hastings chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MhRun {
    pub samples: Vec<LatticeConfig>,
    pub accepted: usize,
    pub iterations: usize,
}

impl MhRun {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.iterations as f64
    }
}

/// Independence Metropolis-Hastings targeting the bridge of the walk with
/// rates `rates`. Proposals are unit-rate lattice bridges, whose density
/// ratio to the target is `M` up to a constant, so a proposal is accepted
/// with probability `min(1, M(proposal) / M(current))`. Runs `burn_in +
/// iterations` steps and keeps every `thinning`-th state after burn-in.
pub fn sample_nonhomogeneous_bridge_mh(
    rates: &JumpRates,
    iterations: usize,
    settings: MhSettings,
    rng: &mut SimRng,
) -> Result<MhRun> {
    rates.validate()?;
    if iterations < 1000 {
        return Err(invalid(format!("need at least 1000 iterations, got {iterations}")));
    }
    if settings.thinning == 0 {
        return Err(invalid("thinning must be positive"));
    }
    let proposal = BridgeSampler::new(BridgeLaw::Lattice { j_plus: 1.0, j_minus: 1.0 })?;
    let mut current = proposal.sample_lattice(rng);
    let mut current_log_m = log_density_m(&current, rates)?;
    let mut samples = Vec::with_capacity(iterations / settings.thinning);
    let mut accepted = 0;
    for step in 0..settings.burn_in + iterations {
        let candidate = proposal.sample_lattice(rng);
        let candidate_log_m = log_density_m(&candidate, rates)?;
        let log_ratio = candidate_log_m - current_log_m;
        let u: f64 = rng.random();
        let accept = log_ratio >= 0.0 || u < log_ratio.exp();
        if accept {
            current = candidate;
            current_log_m = candidate_log_m;
        }
        if step >= settings.burn_in {
            accepted += accept as usize;
            if (step - settings.burn_in + 1).is_multiple_of(settings.thinning) {
                samples.push(current.clone());
            }
        }
    }
    Ok(MhRun { samples, accepted, iterations })
}

/// Mean of `|U+|` under the bridge of `rates`, estimated from `chains`
/// independent Metropolis-Hastings chains run in parallel. The standard
/// error is the spread of the per-chain means.
pub fn mh_mean_pair_count(
    rates: &JumpRates,
    chains: usize,
    iterations: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if chains < 2 {
        return Err(invalid("need at least two chains for a standard error"));
    }
    let means: Vec<f64> = (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let run = sample_nonhomogeneous_bridge_mh(rates, iterations, MhSettings::default(), &mut replica_rng(seed, c))?;
            Ok(run.samples.iter().map(|u| u.pair_count() as f64).sum::<f64>() / run.samples.len() as f64)
        })
        .collect::<Result<_>>()?;
    let stats: RunningStats = means.into_iter().collect();
    Ok((stats.mean(), stats.std_error()))
}

/// Forward differences `Δf(n) = f(n+1) - f(n)` of the solution of the Stein
/// equation `λ (f(n+1) - f(n)) + n^2 (f(n-1) - f(n)) = g(n) - E g` for the
/// birth-death chain with birth rate `λ` and death rate `n^2`, for
/// `n = 0..=n_max`.
///
/// With `π` the stationary law and `h = g - E g`, the solution is
/// `Δf(n) = (1 / (λ π(n))) Σ_{k<=n} π(k) h(k)`. Below the mode the partial
/// sums are accumulated upward; from the mode on the equivalent form
/// `-(1/λ) Σ_{k>n} (π(k)/π(n)) h(k)` is accumulated downward, which avoids
/// dividing by vanishing probabilities.
pub fn solve_birth_death_stein(lambda: f64, g: impl Fn(usize) -> f64, n_max: usize) -> Result<Vec<f64>> {
    let law = IntegerLaw::poisson_diag(lambda)?;
    if n_max < law.n_max() {
        return Err(invalid(format!(
            "n_max = {n_max} is below the truncation point {} of the stationary law",
            law.n_max()
        )));
    }
    let mean_g: f64 = law.pmf.iter().enumerate().map(|(k, p)| p * g(k)).sum();
    let h = |k: usize| g(k) - mean_g;
    let mode = (lambda.sqrt().floor() as usize).min(n_max);

    let mut diff = vec![0.0; n_max + 1];
    // S(n) = Σ_{k<=n} (π(k)/π(n)) h(k), with π(n-1)/π(n) = n^2 / λ
    let mut partial = 0.0;
    for n in 0..mode {
        partial = h(n) + partial * (n * n) as f64 / lambda;
        diff[n] = partial / lambda;
    }
    // T(n) = Σ_{k>n} (π(k)/π(n)) h(k), with π(n+1)/π(n) = λ / (n+1)^2
    let mut tail = 0.0;
    for n in (mode..=n_max).rev() {
        diff[n] = -tail / lambda;
        tail = lambda / (n * n).max(1) as f64 * (h(n) + tail);
    }
    Ok(diff)
}
