//! Explicit bounds for the nonlinear filtering problem with a linear
//! reference system `dX = dW`, `dZ = α X dt + dU` on `[0, T]`.
//!
//! The Gaussian conditional law of the linear system is available in closed
//! form (mean `φ_t`, covariance `σ_{s,t}`). The bounds combine these with the
//! drift constants `K`, `γ`, `M`, `b(0)`, the largest positive root of a
//! generalized polynomial and a Monte Carlo estimate of `E‖X‖²_∞`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::BoundReport;
use crate::error::{invalid, Error, Result};
use crate::rng::replica_rng;
use crate::stats::RunningStats;

/// Below this value of `|α| T` the hyperbolic formulas switch to their
/// small-`α` expansions.
pub const SMALL_ALPHA: f64 = 1e-4;
/// Initial number of Simpson panels for every time integral.
pub const SIMPSON_PANELS: usize = 1024;
/// Relative change between successive refinements at which a quadrature
/// is accepted.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENTS: u32 = 12;
/// Diagonal jitter added when the covariance factorization fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// The linear reference system: observation gain `alpha` on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub alpha: f64,
    pub horizon: f64,
}

impl LinearModel {
    pub fn new(alpha: f64, horizon: f64) -> Result<Self> {
        let model = LinearModel { alpha, horizon };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(invalid(format!("time {t} outside [0, {}]", self.horizon)))
        }
    }
}

/// Hypotheses on the nonlinear drift `b`: `|b'(x)| <= K (1+|x|)^{-γ}` and
/// `‖b''‖_∞ <= M`, together with the value `b(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub b0: f64,
    pub k: f64,
    pub gamma: f64,
    pub m: f64,
}

impl DriftSpec {
    pub fn new(b0: f64, k: f64, gamma: f64, m: f64) -> Result<Self> {
        let spec = DriftSpec { b0, k, gamma, m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b0.is_finite() {
            return Err(invalid(format!("b(0) must be finite, got {}", self.b0)));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(invalid(format!("K must be nonnegative, got {}", self.k)));
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(invalid(format!("M must be nonnegative, got {}", self.m)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }

    /// True for the drift-free case `b ≡ 0`.
    pub fn is_zero(&self) -> bool {
        self.b0 == 0.0 && self.k == 0.0 && self.m == 0.0
    }
}

/// An observation path sampled on `0 = t_0 < ... < t_n = T`, linearly
/// interpolated between grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPath {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl ObservationPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(invalid(format!(
                "an observation path needs at least two matching points, got {} times and {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(invalid(format!("observation grid must start at 0, got {}", grid[0])));
        }
        if values[0] != 0.0 {
            return Err(invalid(format!("observation must start at 0, got {}", values[0])));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid[grid.len() - 1].is_finite() {
            return Err(invalid("observation grid must be strictly increasing and finite"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observation values must be finite"));
        }
        Ok(ObservationPath { grid, values })
    }

    /// `z ≡ 0` on a uniform grid of `n` intervals.
    pub fn zero(horizon: f64, n: usize) -> Result<Self> {
        Self::from_fn(horizon, n, |_| 0.0)
    }

    /// `z(t) = f(t)` on a uniform grid of `n` intervals; `f(0)` must be 0.
    pub fn from_fn(horizon: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("an observation grid needs at least one interval"));
        }
        let grid: Vec<f64> = (0..=n).map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 }).collect();
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Index `k` of the interval `[t_k, t_{k+1}]` containing `t`.
    fn interval(&self, t: f64) -> usize {
        self.grid.partition_point(|&g| g <= t).clamp(1, self.grid.len() - 1) - 1
    }

    /// Linear interpolation of the path at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.interval(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let (z0, z1) = (self.values[k], self.values[k + 1]);
        z0 + (z1 - z0) * (t - t0) / (t1 - t0)
    }
}

/// `sinh(αx) / α`, continuous at `α = 0`.
fn sinh_over_alpha(alpha: f64, x: f64) -> f64 {
    let y = alpha * x;
    if y.abs() < SMALL_ALPHA {
        x * (1.0 + y * y / 6.0)
    } else {
        y.sinh() / alpha
    }
}

/// Conditional covariance `σ_{s,t}` of the signal given the observation:
/// `[sinh(αT - α|t-s|) - sinh(αT - α(s+t))] / (2α cosh(αT))`, with the
/// Brownian limit `min(s, t)` at `α = 0`.
pub fn conditional_cov(model: &LinearModel, s: f64, t: f64) -> Result<f64> {
    model.validate()?;
    model.check_time(s)?;
    model.check_time(t)?;
    Ok(cov_unchecked(model, s, t))
}

fn cov_unchecked(model: &LinearModel, s: f64, t: f64) -> f64 {
    let (alpha, horizon) = (model.alpha, model.horizon);
    let a = horizon - (t - s).abs();
    let b = horizon - s - t;
    if (alpha * horizon).abs() < SMALL_ALPHA {
        let m = s.min(t);
        let a2 = alpha * alpha;
        m * (1.0 + a2 * ((a * a + a * b + b * b) / 6.0 - horizon * horizon / 2.0))
    } else {
        (sinh_over_alpha(alpha, a) - sinh_over_alpha(alpha, b)) / (2.0 * (alpha * horizon).cosh())
    }
}

/// Conditional variance `σ_t = σ_{t,t}`.
pub fn conditional_var(model: &LinearModel, t: f64) -> Result<f64> {
    conditional_cov(model, t, t)
}

/// The conditional mean path `φ_t` of the signal given an observation.
///
/// `φ_T = (1/cosh(αT)) ∫_0^T sinh(αs) dZ_s` with a left-point (Itô) sum on
/// the observation grid. Interior values `φ_t` re-apply the same formula with
/// horizon `t` to the observation truncated at `t`.
#[derive(Debug, Clone)]
pub struct ConditionalMean {
    alpha: f64,
    path: ObservationPath,
    prefix: Vec<f64>,
}

impl ConditionalMean {
    pub fn new(model: &LinearModel, path: &ObservationPath) -> Result<Self> {
        model.validate()?;
        if (path.horizon() - model.horizon).abs() > 1e-12 * model.horizon {
            return Err(invalid(format!(
                "observation ends at {} but the model horizon is {}",
                path.horizon(),
                model.horizon
            )));
        }
        let mut prefix = Vec::with_capacity(path.grid.len());
        let mut acc = 0.0;
        prefix.push(acc);
        for k in 0..path.grid.len() - 1 {
            acc += (model.alpha * path.grid[k]).sinh() * (path.values[k + 1] - path.values[k]);
            prefix.push(acc);
        }
        Ok(ConditionalMean { alpha: model.alpha, path: path.clone(), prefix })
    }

    /// `φ_t` for `t` in `[0, T]`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.path.interval(t);
        let partial = (self.alpha * self.path.grid[k]).sinh() * (self.path.value_at(t) - self.path.values[k]);
        (self.prefix[k] + partial) / (self.alpha * t).cosh()
    }

    /// `φ_T`.
    pub fn terminal(&self) -> f64 {
        self.prefix[self.prefix.len() - 1] / (self.alpha * self.path.horizon()).cosh()
    }

    /// `Ψ(φ) = ∫_0^T φ_s² ds + φ_T²`.
    pub fn psi(&self) -> Result<f64> {
        let integral = integrate(|t| self.at(t).powi(2), &self.path.grid)?;
        Ok(integral + self.terminal().powi(2))
    }
}

/// `φ_T` for the observation `z`.
pub fn conditional_mean_phi_terminal(model: &LinearModel, z: &ObservationPath) -> Result<f64> {
    Ok(ConditionalMean::new(model, z)?.terminal())
}

/// `φ_t` for the observation `z`, by the truncated-horizon rule.
pub fn conditional_mean_phi(model: &LinearModel, z: &ObservationPath, t: f64) -> Result<f64> {
    model.check_time(t)?;
    Ok(ConditionalMean::new(model, z)?.at(t))
}

fn simpson_level(f: &impl Fn(f64) -> f64, breaks: &[f64], per_unit: f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = 2 * ((per_unit * (b - a) / 2.0).ceil() as usize).max(1);
        let h = (b - a) / panels as f64;
        let mut sum = f(a) + f(b);
        for i in 1..panels {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * f(a + h * i as f64);
        }
        total += sum * h / 3.0;
    }
    total
}

/// Integral of `f` over `[breaks[0], breaks[last]]` by composite Simpson
/// rules that never straddle a break point. Starts from
/// [`SIMPSON_PANELS`] panels over the whole range and doubles until two
/// successive estimates agree to [`QUADRATURE_TOLERANCE`] relative.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<f64> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("quadrature needs increasing break points"));
    }
    let length = breaks[breaks.len() - 1] - breaks[0];
    let mut per_unit = SIMPSON_PANELS as f64 / length;
    let mut previous = simpson_level(&f, breaks, per_unit);
    for _ in 0..MAX_REFINEMENTS {
        per_unit *= 2.0;
        let current = simpson_level(&f, breaks, per_unit);
        if !current.is_finite() {
            return Err(Error::Numerical("quadrature produced a non-finite value".into()));
        }
        if (current - previous).abs() <= QUADRATURE_TOLERANCE * current.abs() {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Numerical(format!("quadrature did not reach relative tolerance {QUADRATURE_TOLERANCE}")))
}

/// The covariance matrix `[σ_{t_i,t_j}]` on `t_i = iT/n`, `i = 1..n`.
pub fn covariance_matrix(model: &LinearModel, n: usize) -> Result<DMatrix<f64>> {
    model.validate()?;
    let times: Vec<f64> = (1..=n).map(|i| model.horizon * i as f64 / n as f64).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| cov_unchecked(model, times[i], times[j])))
}

fn cholesky_factor(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let jittered = cov + DMatrix::identity(n, n) * CHOLESKY_JITTER;
    jittered
        .cholesky()
        .map(|ch| ch.l())
        .ok_or_else(|| Error::Numerical("covariance factorization failed after jitter".into()))
}

/// Monte Carlo estimate of `E‖X‖²_∞` under the conditional law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupMoment {
    pub mean: f64,
    pub se: f64,
    pub grid_size: usize,
    pub replicas: usize,
}

/// Monte Carlo parameters of the filtering bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloParams {
    pub grid_size: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for MonteCarloParams {
    fn default() -> Self {
        MonteCarloParams { grid_size: 256, replicas: 10_000, seed: 0 }
    }
}

/// Squared discrete sups of centered conditional paths on the grid of
/// `grid_size` points and on its every-other-point subgrid, replica by
/// replica. The conditional law does not depend on the observation.
fn sup_squares(model: &LinearModel, grid_size: usize, replicas: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let lower = cholesky_factor(covariance_matrix(model, grid_size)?)?;
    let n = grid_size;
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| lower[(i, j)]).collect();
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (mut fine, mut coarse) = (0.0f64, 0.0f64);
            for i in 0..n {
                let row = &rows[i * n..i * n + i + 1];
                let x: f64 = row.iter().zip(&xi).map(|(l, e)| l * e).sum();
                fine = fine.max(x.abs());
                if i % 2 == 1 {
                    coarse = coarse.max(x.abs());
                }
            }
            (fine * fine, coarse * coarse)
        })
        .collect())
}

fn check_sup_params(grid_size: usize, replicas: usize) -> Result<()> {
    if grid_size < 64 {
        return Err(invalid(format!("the sup-moment grid needs at least 64 points, got {grid_size}")));
    }
    if replicas < 1000 {
        return Err(invalid(format!("the sup moment needs at least 1000 replicas, got {replicas}")));
    }
    Ok(())
}

/// `E‖X‖²_∞` estimated by the squared discrete sup over `t_i = iT/n`,
/// `i = 1..n`, of paths drawn through a Cholesky factor of the conditional
/// covariance. This is a lower approximation of the continuous sup.
pub fn gaussian_sup_moment(model: &LinearModel, grid_size: usize, replicas: usize, seed: u64) -> Result<SupMoment> {
    check_sup_params(grid_size, replicas)?;
    let stats: RunningStats = sup_squares(model, grid_size, replicas, seed)?.into_iter().map(|(f, _)| f).collect();
    Ok(SupMoment { mean: stats.mean(), se: stats.std_error(), grid_size, replicas })
}

/// The sup moment on `grid_size` points together with the one on the
/// subgrid of `grid_size / 2` points, computed from the same paths.
pub fn sup_moment_refinement(
    model: &LinearModel,
    grid_size: usize,
    replicas: usize,
    seed: u64,
) -> Result<(SupMoment, SupMoment)> {
    check_sup_params(grid_size / 2, replicas)?;
    if !grid_size.is_multiple_of(2) {
        return Err(invalid(format!("grid size must be even, got {grid_size}")));
    }
    let pairs = sup_squares(model, grid_size, replicas, seed)?;
    let fine: RunningStats = pairs.iter().map(|p| p.0).collect();
    let coarse: RunningStats = pairs.iter().map(|p| p.1).collect();
    Ok((
        SupMoment { mean: coarse.mean(), se: coarse.std_error(), grid_size: grid_size / 2, replicas },
        SupMoment { mean: fine.mean(), se: fine.std_error(), grid_size, replicas },
    ))
}

fn require_large_gamma(d: &DriftSpec) -> Result<()> {
    d.validate()?;
    if !(0.5..1.0).contains(&d.gamma) {
        return Err(invalid(format!(
            "this bound needs gamma in [1/2, 1), got {}; use the small-gamma bound",
            d.gamma
        )));
    }
    Ok(())
}

/// `𝒲 = K|b(0)| + K²/(1-γ) + M/2`, for `γ` in `[1/2, 1)`.
pub fn cal_w(d: &DriftSpec) -> Result<f64> {
    require_large_gamma(d)?;
    Ok(d.k * d.b0.abs() + d.k * d.k / (1.0 - d.gamma) + d.m / 2.0)
}

/// One term `coef · x^exponent` of a generalized polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exponent: f64,
}

/// `p(x) = x² + Σ coef_i x^{e_i}` on `x >= 0`, with exponents in `[0, 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPolynomial {
    pub terms: Vec<Term>,
}

impl GeneralizedPolynomial {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        let terms: Vec<Term> = terms.into_iter().map(|(coef, exponent)| Term { coef, exponent }).collect();
        for t in &terms {
            if !t.coef.is_finite() || !(0.0..2.0).contains(&t.exponent) {
                return Err(invalid(format!(
                    "terms need finite coefficients and exponents in [0, 2), got {} x^{}",
                    t.coef, t.exponent
                )));
            }
        }
        Ok(GeneralizedPolynomial { terms })
    }

    pub fn eval(&self, x: f64) -> f64 {
        x * x + self.terms.iter().map(|t| t.coef * x.powf(t.exponent)).sum::<f64>()
    }

    /// `max(1, max |coef|)`, the scale of residual checks.
    pub fn scale(&self) -> f64 {
        self.terms.iter().fold(1.0, |s, t| s.max(t.coef.abs()))
    }

    /// A point beyond which `p > 0`: the negative terms are dominated by
    /// half of `x²` there.
    fn positive_beyond(&self) -> Result<f64> {
        let mut b = 1.0f64;
        loop {
            let negative: f64 =
                self.terms.iter().filter(|t| t.coef < 0.0).map(|t| -t.coef * b.powf(t.exponent - 2.0)).sum();
            if negative < 0.5 {
                return Ok(b);
            }
            b *= 2.0;
            if b > 1e150 {
                return Err(Error::Numerical("no positivity bound below overflow".into()));
            }
        }
    }
}

/// The rightmost positive root of a generalized polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub root: f64,
    /// `|p(root)|`.
    pub residual: f64,
    /// Sign changes seen by the scan over `(0, B]`. More than one means
    /// the rightmost root is not the only positive root.
    pub sign_changes: usize,
}

/// Subdivisions of each octave in the descending root scan.
pub const SCAN_STEPS_PER_OCTAVE: usize = 1024;
const SCAN_OCTAVES: usize = 80;

/// Largest positive root of `p`. A certified point `B` with `p > 0` beyond
/// it is found by doubling from 1; `(0, B]` is scanned downward octave by
/// octave and the first sign change is refined by bisection down to
/// adjacent floating-point numbers.
pub fn largest_positive_root(p: &GeneralizedPolynomial) -> Result<RootReport> {
    let upper = p.positive_beyond()?;
    let mut bracket = None;
    let mut sign_changes = 0;
    let mut prev_x = upper;
    let mut prev_positive = p.eval(upper) > 0.0;
    let mut hi = upper;
    for _ in 0..SCAN_OCTAVES {
        let step = hi / 2.0 / SCAN_STEPS_PER_OCTAVE as f64;
        for k in 1..=SCAN_STEPS_PER_OCTAVE {
            let x = hi - step * k as f64;
            let positive = p.eval(x) > 0.0;
            if positive != prev_positive {
                sign_changes += 1;
                if bracket.is_none() {
                    bracket = Some((x, prev_x));
                }
            }
            prev_positive = positive;
            prev_x = x;
        }
        hi /= 2.0;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Numerical("no sign change of the polynomial".into()))?;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.eval(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = if p.eval(lo).abs() <= p.eval(hi).abs() { lo } else { hi };
    Ok(RootReport { root, residual: p.eval(root).abs(), sign_changes })
}

/// `p(x) = x² - ζ x^{2-γ} - η x - σ_T`.
pub fn large_gamma_polynomial(zeta: f64, eta: f64, sigma_t: f64, gamma: f64) -> Result<GeneralizedPolynomial> {
    GeneralizedPolynomial::new(vec![(-zeta, 2.0 - gamma), (-eta, 1.0), (-sigma_t, 0.0)])
}

/// Filtering bound for `γ` in `[1/2, 1)`:
/// `E‖X‖²_∞ (|b(0)| + T𝒲 + K/(1-γ) 𝒱^{1-γ})`. The details carry every
/// intermediate constant.
pub fn bound_large_gamma(
    model: &LinearModel,
    z: &ObservationPath,
    d: &DriftSpec,
    mc: &MonteCarloParams,
) -> Result<BoundReport> {
    let w = cal_w(d)?;
    let mean = ConditionalMean::new(model, z)?;
    let horizon = model.horizon;
    let sigma_t = cov_unchecked(model, horizon, horizon);
    let int_sigma = integrate(|s| cov_unchecked(model, s, horizon), &[0.0, horizon])?;
    let phi_t = mean.terminal();
    let eta = w * int_sigma + sigma_t * d.b0.abs() + phi_t.abs();
    let zeta = sigma_t * d.k / (1.0 - d.gamma);
    let root = largest_positive_root(&large_gamma_polynomial(zeta, eta, sigma_t, d.gamma)?)?;
    let sup = gaussian_sup_moment(model, mc.grid_size, mc.replicas, mc.seed)?;
    let factor = d.b0.abs() + horizon * w + d.k / (1.0 - d.gamma) * root.root.powf(1.0 - d.gamma);
    Ok(BoundReport {
        variant: "filtering_large_gamma".into(),
        inputs: json!({ "model": model, "drift": d, "monte_carlo": mc, "observation_points": z.grid().len() }),
        value: sup.mean * factor,
        se: Some(sup.se * factor),
        details: Some(json!({
            "cal_w": w,
            "int_sigma_s_t": int_sigma,
            "sigma_t": sigma_t,
            "phi_t": phi_t,
            "eta": eta,
            "zeta": zeta,
            "cal_v": root.root,
            "root_residual": root.residual,
            "sign_changes": root.sign_changes,
            "sup_moment": sup.mean,
            "sup_moment_se": sup.se,
            "factor": factor,
        })),
    })
}

/// The constants `c1 = K/(1-γ)`, `c2 = K|b(0)| + M/2`, `c3 = K²/(1-γ)`.
pub fn small_gamma_constants(d: &DriftSpec) -> (f64, f64, f64) {
    let c1 = d.k / (1.0 - d.gamma);
    (c1, d.k * d.b0.abs() + d.m / 2.0, d.k * c1)
}

/// `p(x) = x² - σ̄ - A x - 2σ̄ c3 T^γ x^{2-2γ} - √2 σ̄ c1 x^{2-γ}` with
/// `A = σ̄√2|b(0)| + σ̄√(2T(c2² + 2c3²)) + Ψ(φ)^{1/2}`.
pub fn small_gamma_polynomial(
    d: &DriftSpec,
    horizon: f64,
    sigma_bar: f64,
    psi: f64,
) -> Result<GeneralizedPolynomial> {
    let (c1, c2, c3) = small_gamma_constants(d);
    let sqrt2 = std::f64::consts::SQRT_2;
    let linear = sigma_bar * sqrt2 * d.b0.abs()
        + sigma_bar * (2.0 * horizon * (c2 * c2 + 2.0 * c3 * c3)).sqrt()
        + psi.sqrt();
    GeneralizedPolynomial::new(vec![
        (-sigma_bar, 0.0),
        (-linear, 1.0),
        (-2.0 * sigma_bar * c3 * horizon.powf(d.gamma), 2.0 - 2.0 * d.gamma),
        (-sqrt2 * sigma_bar * c1, 2.0 - d.gamma),
    ])
}

/// Filtering bound for `γ` in `(0, 1/2)`:
/// `E‖X‖²_∞ (|b(0)| + (c2+c3)T + c3 T^{1/2+γ} 𝒱^{1-2γ} + c1 𝒱^{1-γ})`.
pub fn bound_small_gamma(
    model: &LinearModel,
    z: &ObservationPath,
    d: &DriftSpec,
    mc: &MonteCarloParams,
) -> Result<BoundReport> {
    d.validate()?;
    if d.gamma >= 0.5 {
        return Err(invalid(format!(
            "this bound needs gamma in (0, 1/2), got {}; use the large-gamma bound",
            d.gamma
        )));
    }
    let mean = ConditionalMean::new(model, z)?;
    let horizon = model.horizon;
    let sigma_t = cov_unchecked(model, horizon, horizon);
    let sigma_bar = integrate(|s| cov_unchecked(model, s, s), &[0.0, horizon])? + sigma_t;
    let psi = mean.psi()?;
    let (c1, c2, c3) = small_gamma_constants(d);
    let root = largest_positive_root(&small_gamma_polynomial(d, horizon, sigma_bar, psi)?)?;
    let sup = gaussian_sup_moment(model, mc.grid_size, mc.replicas, mc.seed)?;
    let v = root.root;
    let factor = d.b0.abs()
        + (c2 + c3) * horizon
        + c3 * horizon.powf(0.5 + d.gamma) * v.powf(1.0 - 2.0 * d.gamma)
        + c1 * v.powf(1.0 - d.gamma);
    Ok(BoundReport {
        variant: "filtering_small_gamma".into(),
        inputs: json!({ "model": model, "drift": d, "monte_carlo": mc, "observation_points": z.grid().len() }),
        value: sup.mean * factor,
        se: Some(sup.se * factor),
        details: Some(json!({
            "c1": c1,
            "c2": c2,
            "c3": c3,
            "sigma_t": sigma_t,
            "sigma_bar": sigma_bar,
            "phi_t": mean.terminal(),
            "psi_phi": psi,
            "cal_v": v,
            "root_residual": root.residual,
            "sign_changes": root.sign_changes,
            "sup_moment": sup.mean,
            "sup_moment_se": sup.se,
            "factor": factor,
        })),
    })
}

/// Picks the bound matching the range of `γ`.
pub fn bound_filtering(
    model: &LinearModel,
    z: &ObservationPath,
    d: &DriftSpec,
    mc: &MonteCarloParams,
) -> Result<BoundReport> {
    d.validate()?;
    if d.gamma >= 0.5 {
        bound_large_gamma(model, z, d, mc)
    } else {
        bound_small_gamma(model, z, d, mc)
    }
}
