//! Continuous-time Markov chains on configuration spaces.
//!
//! Every chain is a birth-death dynamics: births add a pair of jump times,
//! deaths remove one. Simulation follows the jump-chain (Gillespie) scheme:
//! hold for an exponential time with the total rate of the current state,
//! then pick a birth or a death in proportion to their rates. Births whose
//! intensity is not uniform are realized by thinning a dominating uniform
//! proposal, so rejected proposals leave the state unchanged.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{block_index, HypercubeConfig, LatticeConfig, MoveEffect};
use crate::error::{invalid, Error, Result};
use crate::rates::JumpRates;
use crate::rng::{exponential, open01, replica_rng, SimRng};

/// Default burn-in time for stationary estimates: ten time constants of the
/// `e^{-t/2}` contraction.
pub const DEFAULT_BURN_IN: f64 = 20.0;

/// Whether a pair move adds or removes jump times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveOp {
    Add,
    Remove,
}

/// A move `Psi_{r,s}` together with its effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMove {
    pub op: MoveOp,
    pub r: f64,
    pub s: f64,
}

/// A unit step of an integer-valued chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMove {
    pub op: MoveOp,
}

/// One jump of a chain at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event<M> {
    pub t: f64,
    #[serde(flatten)]
    pub mv: M,
}

/// A simulated path: the initial state, every jump, and the state at
/// `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, M> {
    pub initial: S,
    pub events: Vec<Event<M>>,
    pub final_state: S,
    pub t_end: f64,
}

impl<S: Clone, M: Copy> Trajectory<S, M> {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.t).collect()
    }
}

/// States that can replay recorded moves.
pub trait Replay<M> {
    fn replay(&mut self, mv: &M);
}

impl Replay<PairMove> for HypercubeConfig {
    fn replay(&mut self, mv: &PairMove) {
        self.apply_in_place(mv.r, mv.s);
    }
}

impl Replay<PairMove> for LatticeConfig {
    fn replay(&mut self, mv: &PairMove) {
        self.apply_in_place(mv.r, mv.s);
    }
}

impl Replay<CountMove> for u64 {
    fn replay(&mut self, mv: &CountMove) {
        match mv.op {
            MoveOp::Add => *self += 1,
            MoveOp::Remove => *self -= 1,
        }
    }
}

impl<S: Clone + Replay<M>, M: Copy> Trajectory<S, M> {
    /// The state after each event, in order.
    pub fn states(&self) -> Vec<S> {
        let mut state = self.initial.clone();
        self.events
            .iter()
            .map(|e| {
                state.replay(&e.mv);
                state.clone()
            })
            .collect()
    }

    /// The state at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> S {
        let mut state = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.t <= t) {
            state.replay(&e.mv);
        }
        state
    }
}

/// A birth-death dynamics in the form the simulator consumes.
pub trait Dynamics {
    type State: Clone;
    type Move: Copy;

    /// Birth and death intensities at `state`. The birth intensity may be a
    /// majorant when [`Dynamics::propose_birth`] thins.
    fn rates(&self, state: &Self::State) -> Result<(f64, f64)>;

    /// Draws a birth given the birth intensity returned by `rates`; `None`
    /// means the proposal was thinned away.
    fn propose_birth(
        &self,
        state: &Self::State,
        birth_rate: f64,
        rng: &mut SimRng,
    ) -> Result<Option<Self::Move>>;

    fn propose_death(&self, state: &Self::State, rng: &mut SimRng) -> Self::Move;

    /// Applies a move; returns false if it left the state unchanged.
    fn apply(&self, state: &mut Self::State, mv: &Self::Move) -> bool;
}

/// Runs a chain up to `t_end`, calling `observe(t, move, new_state)` after
/// each jump, and returns the state at `t_end`.
pub fn run_chain<D: Dynamics>(
    dynamics: &D,
    initial: D::State,
    t_end: f64,
    rng: &mut SimRng,
    mut observe: impl FnMut(f64, &D::Move, &D::State),
) -> Result<D::State> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    let mut state = initial;
    let mut t = 0.0;
    loop {
        let (birth, death) = dynamics.rates(&state)?;
        let total = birth + death;
        if total <= 0.0 {
            return Ok(state);
        }
        t += exponential(rng, total);
        if t > t_end {
            return Ok(state);
        }
        let mv = if rng.random::<f64>() * total < birth {
            match dynamics.propose_birth(&state, birth, rng)? {
                Some(mv) => mv,
                None => continue,
            }
        } else {
            dynamics.propose_death(&state, rng)
        };
        if dynamics.apply(&mut state, &mv) {
            observe(t, &mv, &state);
        }
    }
}

/// Runs a chain and records every jump.
pub fn simulate<D: Dynamics>(
    dynamics: &D,
    initial: D::State,
    t_end: f64,
    rng: &mut SimRng,
) -> Result<Trajectory<D::State, D::Move>> {
    let mut events = Vec::new();
    let final_state = run_chain(dynamics, initial.clone(), t_end, rng, |t, mv, _| {
        events.push(Event { t, mv: *mv })
    })?;
    Ok(Trajectory { initial, events, final_state, t_end })
}

/// Runs a chain and keeps only the final state and the number of jumps.
pub fn run_summary<D: Dynamics>(
    dynamics: &D,
    initial: D::State,
    t_end: f64,
    rng: &mut SimRng,
) -> Result<(D::State, usize)> {
    let mut n_events = 0;
    let state = run_chain(dynamics, initial, t_end, rng, |_, _, _| n_events += 1)?;
    Ok((state, n_events))
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Uniform ordered pair of distinct indices below `n`.
fn distinct_pair(n: usize, rng: &mut SimRng) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Walk on `{0, 1}` bridges: births of a uniform pair `r < s` at rate
/// `alpha^2 / 2`, deaths of each existing pair at rate 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypercubeDynamics {
    pub alpha: f64,
}

impl HypercubeDynamics {
    pub fn new(alpha: f64) -> Result<Self> {
        check_rate("alpha", alpha)?;
        Ok(Self { alpha })
    }

    /// Holding rate `c(U) = alpha^2 / 2 + C(|U|, 2)`.
    pub fn holding_rate(&self, state: &HypercubeConfig) -> f64 {
        let n = state.len() as f64;
        self.alpha * self.alpha / 2.0 + n * (n - 1.0) / 2.0
    }
}

impl Dynamics for HypercubeDynamics {
    type State = HypercubeConfig;
    type Move = PairMove;

    fn rates(&self, state: &HypercubeConfig) -> Result<(f64, f64)> {
        let n = state.len() as f64;
        Ok((self.alpha * self.alpha / 2.0, n * (n - 1.0) / 2.0))
    }

    fn propose_birth(&self, _: &HypercubeConfig, _: f64, rng: &mut SimRng) -> Result<Option<PairMove>> {
        let (u, v) = (open01(rng), open01(rng));
        Ok(Some(PairMove { op: MoveOp::Add, r: u.min(v), s: u.max(v) }))
    }

    fn propose_death(&self, state: &HypercubeConfig, rng: &mut SimRng) -> PairMove {
        let (i, j) = distinct_pair(state.len(), rng);
        let (a, b) = (state.times()[i.min(j)], state.times()[i.max(j)]);
        PairMove { op: MoveOp::Remove, r: a, s: b }
    }

    fn apply(&self, state: &mut HypercubeConfig, mv: &PairMove) -> bool {
        mv.r != mv.s && state.apply_in_place(mv.r, mv.s) != MoveEffect::Identity
    }
}

/// Death step shared by every chain on lattice configurations: each element
/// of `U+ x U-` is removed at rate 1.
fn lattice_death(state: &LatticeConfig, rng: &mut SimRng) -> PairMove {
    let m = state.pair_count();
    let r = state.up()[rng.random_range(0..m)];
    let s = state.down()[rng.random_range(0..m)];
    PairMove { op: MoveOp::Remove, r, s }
}

fn lattice_death_rate(state: &LatticeConfig) -> f64 {
    let m = state.pair_count() as f64;
    m * m
}

fn lattice_apply(state: &mut LatticeConfig, mv: &PairMove) -> bool {
    mv.r != mv.s && state.apply_in_place(mv.r, mv.s) != MoveEffect::Identity
}

/// Homogeneous walk on `Z` bridges: births of a uniform `(r, s)` in
/// `(0, 1)^2` at rate `j+ j-`, deaths at rate 1 per element of `U+ x U-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeDynamics {
    pub j_plus: f64,
    pub j_minus: f64,
}

impl LatticeDynamics {
    pub fn new(j_plus: f64, j_minus: f64) -> Result<Self> {
        check_rate("j_plus", j_plus)?;
        check_rate("j_minus", j_minus)?;
        Ok(Self { j_plus, j_minus })
    }

    /// Holding rate `j+ j- + |U+| |U-|`.
    pub fn holding_rate(&self, state: &LatticeConfig) -> f64 {
        self.j_plus * self.j_minus + lattice_death_rate(state)
    }
}

impl Dynamics for LatticeDynamics {
    type State = LatticeConfig;
    type Move = PairMove;

    fn rates(&self, state: &LatticeConfig) -> Result<(f64, f64)> {
        Ok((self.j_plus * self.j_minus, lattice_death_rate(state)))
    }

    fn propose_birth(&self, _: &LatticeConfig, _: f64, rng: &mut SimRng) -> Result<Option<PairMove>> {
        Ok(Some(PairMove { op: MoveOp::Add, r: open01(rng), s: open01(rng) }))
    }

    fn propose_death(&self, state: &LatticeConfig, rng: &mut SimRng) -> PairMove {
        lattice_death(state, rng)
    }

    fn apply(&self, state: &mut LatticeConfig, mv: &PairMove) -> bool {
        lattice_apply(state, mv)
    }
}

/// Birth-death chain on the integers with birth rate `lambda` and death rate
/// `n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDiagDynamics {
    pub lambda: f64,
}

impl PoissonDiagDynamics {
    pub fn new(lambda: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        Ok(Self { lambda })
    }

    pub fn holding_rate(&self, n: u64) -> f64 {
        self.lambda + (n * n) as f64
    }
}

impl Dynamics for PoissonDiagDynamics {
    type State = u64;
    type Move = CountMove;

    fn rates(&self, n: &u64) -> Result<(f64, f64)> {
        Ok((self.lambda, (n * n) as f64))
    }

    fn propose_birth(&self, _: &u64, _: f64, _: &mut SimRng) -> Result<Option<CountMove>> {
        Ok(Some(CountMove { op: MoveOp::Add }))
    }

    fn propose_death(&self, _: &u64, _: &mut SimRng) -> CountMove {
        CountMove { op: MoveOp::Remove }
    }

    fn apply(&self, n: &mut u64, mv: &CountMove) -> bool {
        n.replay(mv);
        true
    }
}

/// Chain whose invariant law is the bridge of the scheme with `N` blocks:
/// births into two distinct unoccupied blocks at rate `(1 - 2/N)^{-2}` per
/// unit area, deaths as in the lattice chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeDynamics {
    pub n_blocks: usize,
}

impl SchemeDynamics {
    pub fn new(n_blocks: usize) -> Result<Self> {
        if n_blocks < 3 {
            return Err(invalid(format!("the scheme needs N >= 3, got {n_blocks}")));
        }
        Ok(Self { n_blocks })
    }

    /// Lebesgue measure of the admissible birth region: `F (F - 1) / N^2`
    /// with `F` the number of unoccupied blocks.
    pub fn birth_area(&self, state: &LatticeConfig) -> f64 {
        let n = self.n_blocks as f64;
        let free = n - 2.0 * state.pair_count() as f64;
        (free * (free - 1.0)).max(0.0) / (n * n)
    }

    pub fn birth_rate(&self, state: &LatticeConfig) -> f64 {
        let q = 1.0 - 2.0 / self.n_blocks as f64;
        self.birth_area(state) / (q * q)
    }

    fn occupied(&self, state: &LatticeConfig) -> Vec<bool> {
        let mut occ = vec![false; self.n_blocks + 1];
        for &t in state.up().iter().chain(state.down()) {
            occ[block_index(t, self.n_blocks)] = true;
        }
        occ
    }
}

impl Dynamics for SchemeDynamics {
    type State = LatticeConfig;
    type Move = PairMove;

    fn rates(&self, state: &LatticeConfig) -> Result<(f64, f64)> {
        Ok((self.birth_rate(state), lattice_death_rate(state)))
    }

    fn propose_birth(&self, state: &LatticeConfig, _: f64, rng: &mut SimRng) -> Result<Option<PairMove>> {
        let occ = self.occupied(state);
        loop {
            let (r, s) = (open01(rng), open01(rng));
            let (br, bs) = (block_index(r, self.n_blocks), block_index(s, self.n_blocks));
            if br != bs && !occ[br] && !occ[bs] {
                return Ok(Some(PairMove { op: MoveOp::Add, r, s }));
            }
        }
    }

    fn propose_death(&self, state: &LatticeConfig, rng: &mut SimRng) -> PairMove {
        lattice_death(state, rng)
    }

    fn apply(&self, state: &mut LatticeConfig, mv: &PairMove) -> bool {
        lattice_apply(state, mv)
    }
}

/// `log M(X(U))`: minus the integral of the total rate along the path plus
/// the log-rates of every jump, evaluated at the level before the jump.
pub fn log_density_m(config: &LatticeConfig, rates: &JumpRates) -> Result<f64> {
    let mut level = 0i64;
    let mut last = 0.0;
    let mut log_m = 0.0;
    for (t, sign) in config.signed_jumps() {
        log_m -= rates.total(level) * (t - last);
        log_m += if sign > 0 { rates.checked_up(level)? } else { rates.checked_down(level)? }.ln();
        level += sign as i64;
        last = t;
    }
    log_m -= rates.total(level) * (1.0 - last);
    rates.checked_up(level)?;
    rates.checked_down(level)?;
    Ok(log_m)
}

/// `H(U, r, s) = M(X(Psi_{r,s} U)) / M(X(U))`. Equals 1 when the move is the
/// identity.
pub fn density_ratio_h(config: &LatticeConfig, r: f64, s: f64, rates: &JumpRates) -> Result<f64> {
    let moved = config.apply_move(r, s)?;
    if &moved == config {
        return Ok(1.0);
    }
    Ok((log_density_m(&moved, rates)? - log_density_m(config, rates)?).exp())
}

/// Smallest and largest value of `H(U, u, v)` over all additions `(u, v)`.
///
/// Between consecutive jump times of `U`, and on each side of the diagonal,
/// `log H` is affine in `(u, v)`: the new jumps sit at fixed levels and the
/// shifted stretch of path changes length linearly. The extremes are
/// therefore attained at cell vertices, which are evaluated from inside the
/// cell.
pub fn density_ratio_extremes(config: &LatticeConfig, rates: &JumpRates) -> Result<(f64, f64)> {
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * config.pair_count() + 2);
    cuts.push(0.0);
    cuts.extend(config.signed_jumps().iter().map(|j| j.0));
    cuts.push(1.0);
    let base = log_density_m(config, rates)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut visit = |u: f64, v: f64| -> Result<()> {
        let moved = config.apply_move(u, v)?;
        let h = (log_density_m(&moved, rates)? - base).exp();
        lo = lo.min(h);
        hi = hi.max(h);
        Ok(())
    };
    for i in 0..cuts.len() - 1 {
        let (a, b) = (cuts[i], cuts[i + 1]);
        let da = (b - a) * 1e-9;
        let ends_i = [a + da, b - da];
        for j in 0..cuts.len() - 1 {
            let (c, d) = (cuts[j], cuts[j + 1]);
            if i != j {
                let dc = (d - c) * 1e-9;
                for &u in &ends_i {
                    for &v in &[c + dc, d - dc] {
                        visit(u, v)?;
                    }
                }
            } else {
                // u < v triangle, then v < u triangle
                for (u, v) in [(a + da, a + 2.0 * da), (a + da, b - da), (b - 2.0 * da, b - da)] {
                    visit(u, v)?;
                    visit(v, u)?;
                }
            }
        }
    }
    Ok((lo, hi))
}

/// How the thinning majorant `Lambda(U)` of the birth intensity is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BirthMajorant {
    /// Exact supremum of `H` over the cells of `U`, times `safety`.
    CellSup { safety: f64 },
    /// A caller-supplied constant.
    Fixed { rate_sup: f64 },
    /// `mu (mu / nu)^{|U+|}`, valid for constant-speed rates with
    /// `nu <= a(j) b(j+1) <= mu`.
    ConstantSpeed { mu: f64, nu: f64 },
    /// Largest `H` over an 8 x 8 grid of probes, times 1.5.
    ProbeGrid,
}

impl Default for BirthMajorant {
    fn default() -> Self {
        BirthMajorant::CellSup { safety: 1.05 }
    }
}

impl BirthMajorant {
    pub fn evaluate(&self, config: &LatticeConfig, rates: &JumpRates) -> Result<f64> {
        match *self {
            BirthMajorant::CellSup { safety } => {
                Ok(density_ratio_extremes(config, rates)?.1 * safety)
            }
            BirthMajorant::Fixed { rate_sup } => Ok(rate_sup),
            BirthMajorant::ConstantSpeed { mu, nu } => {
                Ok(mu * (mu / nu).powi(config.pair_count() as i32))
            }
            BirthMajorant::ProbeGrid => {
                let mut best: f64 = 0.0;
                for i in 0..8 {
                    for j in 0..8 {
                        let (u, v) = ((i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 8.0);
                        if u != v {
                            best = best.max(density_ratio_h(config, u, v, rates)?);
                        }
                    }
                }
                Ok(best * 1.5)
            }
        }
    }
}

/// Bridges of a walk with level-dependent rates, reached by births with
/// intensity `H(U, r, s)` over `(0, 1)^2` and deaths as in the lattice chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NonhomogeneousDynamics {
    pub rates: JumpRates,
    pub majorant: BirthMajorant,
}

impl NonhomogeneousDynamics {
    pub fn new(rates: JumpRates, majorant: BirthMajorant) -> Result<Self> {
        rates.validate()?;
        match majorant {
            BirthMajorant::CellSup { safety } if !(safety >= 1.0) => {
                return Err(invalid("majorant safety factor must be at least 1"));
            }
            BirthMajorant::Fixed { rate_sup } => check_rate("rate_sup", rate_sup)?,
            BirthMajorant::ConstantSpeed { mu, nu } if !(mu >= nu && nu > 0.0) => {
                return Err(invalid("constant-speed majorant needs mu >= nu > 0"));
            }
            _ => {}
        }
        Ok(Self { rates, majorant })
    }
}

impl Dynamics for NonhomogeneousDynamics {
    type State = LatticeConfig;
    type Move = PairMove;

    fn rates(&self, state: &LatticeConfig) -> Result<(f64, f64)> {
        Ok((self.majorant.evaluate(state, &self.rates)?, lattice_death_rate(state)))
    }

    fn propose_birth(&self, state: &LatticeConfig, bound: f64, rng: &mut SimRng) -> Result<Option<PairMove>> {
        let (r, s) = (open01(rng), open01(rng));
        if r == s || state.has_down(r) || state.has_up(s) || state.has_up(r) || state.has_down(s) {
            return Ok(None);
        }
        let h = density_ratio_h(state, r, s, &self.rates)?;
        if h > bound {
            return Err(Error::MajorantViolated { ratio: h, bound });
        }
        Ok((rng.random::<f64>() * bound < h).then_some(PairMove { op: MoveOp::Add, r, s }))
    }

    fn propose_death(&self, state: &LatticeConfig, rng: &mut SimRng) -> PairMove {
        lattice_death(state, rng)
    }

    fn apply(&self, state: &mut LatticeConfig, mv: &PairMove) -> bool {
        lattice_apply(state, mv)
    }
}

pub type PairTrajectory<S> = Trajectory<S, PairMove>;

pub fn simulate_hypercube_chain(
    u0: HypercubeConfig,
    alpha: f64,
    t_end: f64,
    seed: u64,
) -> Result<PairTrajectory<HypercubeConfig>> {
    simulate(&HypercubeDynamics::new(alpha)?, u0, t_end, &mut replica_rng(seed, 0))
}

pub fn simulate_lattice_chain(
    u0: LatticeConfig,
    j_plus: f64,
    j_minus: f64,
    t_end: f64,
    seed: u64,
) -> Result<PairTrajectory<LatticeConfig>> {
    simulate(&LatticeDynamics::new(j_plus, j_minus)?, u0, t_end, &mut replica_rng(seed, 0))
}

pub fn simulate_nonhomogeneous_chain(
    u0: LatticeConfig,
    rates: JumpRates,
    majorant: BirthMajorant,
    t_end: f64,
    seed: u64,
) -> Result<PairTrajectory<LatticeConfig>> {
    let dynamics = NonhomogeneousDynamics::new(rates, majorant)?;
    simulate(&dynamics, u0, t_end, &mut replica_rng(seed, 0))
}

pub fn simulate_scheme_chain(
    u0: LatticeConfig,
    n_blocks: usize,
    t_end: f64,
    seed: u64,
) -> Result<PairTrajectory<LatticeConfig>> {
    let dynamics = SchemeDynamics::new(n_blocks)?;
    if u0.occupied_blocks(n_blocks).is_none() {
        return Err(Error::InvalidConfig("initial state has two jumps in one block".into()));
    }
    simulate(&dynamics, u0, t_end, &mut replica_rng(seed, 0))
}

pub fn simulate_poisson_diag_chain(
    n0: u64,
    lambda: f64,
    t_end: f64,
    seed: u64,
) -> Result<Trajectory<u64, CountMove>> {
    simulate(&PoissonDiagDynamics::new(lambda)?, n0, t_end, &mut replica_rng(seed, 0))
}

/// The chain families in one parameter type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ChainModel {
    Hypercube { alpha: f64 },
    Lattice { j_plus: f64, j_minus: f64 },
    Nonhomogeneous { rates: JumpRates, majorant: BirthMajorant },
    Scheme { n: usize },
    PoissonDiag { lambda: f64 },
}

/// Per-replica outcome of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub replica: u64,
    /// `|U|/2` for hypercube states, `|U+|` for lattice states, `n` for the
    /// integer chain.
    pub t_end_state_size: u64,
    pub n_events: u64,
}

impl ChainModel {
    /// Runs `replicas` independent copies from the empty state (or 0) in
    /// parallel; replica `k` uses stream `k` of `seed`.
    pub fn ensemble(&self, t_end: f64, replicas: u64, seed: u64) -> Result<Vec<EnsembleRow>> {
        fn go<D: Dynamics + Sync>(
            d: &D,
            init: D::State,
            size: impl Fn(&D::State) -> u64 + Sync,
            t_end: f64,
            replicas: u64,
            seed: u64,
        ) -> Result<Vec<EnsembleRow>>
        where
            D::State: Send + Sync,
        {
            (0..replicas)
                .into_par_iter()
                .map(|replica| {
                    let mut rng = replica_rng(seed, replica);
                    let (state, n) = run_summary(d, init.clone(), t_end, &mut rng)?;
                    Ok(EnsembleRow { replica, t_end_state_size: size(&state), n_events: n as u64 })
                })
                .collect()
        }
        match self {
            ChainModel::Hypercube { alpha } => go(
                &HypercubeDynamics::new(*alpha)?,
                HypercubeConfig::empty(),
                |s| s.pair_count() as u64,
                t_end,
                replicas,
                seed,
            ),
            ChainModel::Lattice { j_plus, j_minus } => go(
                &LatticeDynamics::new(*j_plus, *j_minus)?,
                LatticeConfig::empty(),
                |s| s.pair_count() as u64,
                t_end,
                replicas,
                seed,
            ),
            ChainModel::Nonhomogeneous { rates, majorant } => go(
                &NonhomogeneousDynamics::new(rates.clone(), majorant.clone())?,
                LatticeConfig::empty(),
                |s| s.pair_count() as u64,
                t_end,
                replicas,
                seed,
            ),
            ChainModel::Scheme { n } => go(
                &SchemeDynamics::new(*n)?,
                LatticeConfig::empty(),
                |s| s.pair_count() as u64,
                t_end,
                replicas,
                seed,
            ),
            ChainModel::PoissonDiag { lambda } => go(
                &PoissonDiagDynamics::new(*lambda)?,
                0u64,
                |n| *n,
                t_end,
                replicas,
                seed,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, ks_one_sample_critical};

    fn lc(up: &[f64], down: &[f64]) -> LatticeConfig {
        LatticeConfig::new(up.to_vec(), down.to_vec()).unwrap()
    }

    #[test]
    fn tiny_alpha_never_adds() {
        let traj = simulate_hypercube_chain(HypercubeConfig::empty(), 1e-9, 100.0, 3).unwrap();
        assert!(traj.events.is_empty());
        assert!(traj.final_state.is_empty());
    }

    #[test]
    fn holding_rates() {
        let u = HypercubeConfig::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(HypercubeDynamics::new(1.0).unwrap().holding_rate(&u), 6.5);
        assert_eq!(LatticeDynamics::new(2.0, 3.0).unwrap().holding_rate(&LatticeConfig::empty()), 6.0);
        assert_eq!(PoissonDiagDynamics::new(2.0).unwrap().holding_rate(3), 11.0);
    }

    #[test]
    fn mean_holding_time_hypercube() {
        let u = HypercubeConfig::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let d = HypercubeDynamics::new(1.0).unwrap();
        let times: Vec<f64> = (0..10_000)
            .map(|k| {
                let mut rng = replica_rng(11, k);
                let mut first = f64::NAN;
                run_chain(&d, u.clone(), 10.0, &mut rng, |t, _, _| {
                    if first.is_nan() {
                        first = t;
                    }
                })
                .unwrap();
                first
            })
            .collect();
        let rate = 6.5;
        let stat = ks_one_sample(&times, |x| 1.0 - (-rate * x).exp());
        assert!(stat < ks_one_sample_critical(times.len(), 0.001), "KS statistic {stat}");
    }

    #[test]
    fn single_pair_death_empties() {
        let d = LatticeDynamics::new(1.0, 1.0).unwrap();
        let u = lc(&[0.3], &[0.6]);
        let mut rng = replica_rng(0, 0);
        for _ in 0..20 {
            let mv = d.propose_death(&u, &mut rng);
            assert_eq!(u.apply_move(mv.r, mv.s).unwrap(), LatticeConfig::empty());
        }
    }

    #[test]
    fn poisson_chain_starts_with_birth() {
        for seed in 0..50 {
            let traj = simulate_poisson_diag_chain(0, 1.0, 5.0, seed).unwrap();
            if let Some(e) = traj.events.first() {
                assert_eq!(e.mv.op, MoveOp::Add);
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let a = simulate_lattice_chain(LatticeConfig::empty(), 1.0, 1.0, 20.0, 42).unwrap();
        let b = simulate_lattice_chain(LatticeConfig::empty(), 1.0, 1.0, 20.0, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_lattice_chain(LatticeConfig::empty(), 1.0, 1.0, 20.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn trajectory_states_step_by_one_move() {
        let traj = simulate_hypercube_chain(HypercubeConfig::empty(), 2.0, 30.0, 5).unwrap();
        let mut prev = traj.initial.clone();
        let mut last_t = 0.0;
        for (e, state) in traj.events.iter().zip(traj.states()) {
            assert!(e.t > last_t);
            assert_eq!(prev.graph_distance(&state), 1);
            last_t = e.t;
            prev = state;
        }
        assert_eq!(prev, traj.final_state);
        assert_eq!(traj.state_at(traj.t_end), traj.final_state);
    }

    #[test]
    fn rejects_negative_horizon() {
        assert!(simulate_poisson_diag_chain(0, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn unit_rates_have_constant_density() {
        let u = lc(&[0.2, 0.5], &[0.4, 0.9]);
        let unit = JumpRates::unit();
        assert!((log_density_m(&u, &unit).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(density_ratio_h(&u, 0.3, 0.7, &unit).unwrap(), 1.0);
    }

    #[test]
    fn empty_config_density() {
        let rates = JumpRates::Periodic { up: vec![0.7, 1.3], down: vec![0.4, 2.0] };
        let v = log_density_m(&LatticeConfig::empty(), &rates).unwrap();
        assert!((v + 1.1).abs() < 1e-15);
    }

    #[test]
    fn density_of_single_excursion() {
        // level 0 on [0, .3) and [.6, 1], level 1 on [.3, .6)
        let rates = JumpRates::Periodic { up: vec![0.5, 3.0], down: vec![2.0, 0.25] };
        let u = lc(&[0.3], &[0.6]);
        let expect = -2.5 * 0.7 - 3.25 * 0.3 + 0.5f64.ln() + 0.25f64.ln();
        assert!((log_density_m(&u, &rates).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn add_then_remove_ratio_telescopes() {
        let rates = JumpRates::reversible_alternating(0.4);
        let u = lc(&[0.15], &[0.8]);
        let h1 = density_ratio_h(&u, 0.3, 0.55, &rates).unwrap();
        let v = u.apply_move(0.3, 0.55).unwrap();
        let h2 = density_ratio_h(&v, 0.3, 0.55, &rates).unwrap();
        assert!((h1 * h2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reversible_ratio_envelope() {
        let kappa = 0.5;
        let rates = JumpRates::reversible_with_increment(kappa);
        let u = lc(&[0.1, 0.45], &[0.3, 0.7]);
        for i in 1..40 {
            for j in 1..40 {
                let (r, s) = (i as f64 / 40.0 + 0.003, j as f64 / 40.0 + 0.001);
                if r >= 1.0 || s >= 1.0 || r == s {
                    continue;
                }
                let h = density_ratio_h(&u, r, s, &rates).unwrap();
                let w = kappa * (r - s).abs();
                assert!(h >= (-w).exp() - 1e-12 && h <= w.exp() + 1e-12, "H={h} at ({r},{s})");
            }
        }
    }

    #[test]
    fn cell_extremes_dominate_grid() {
        let rates = JumpRates::constant_speed_alternating(2.0);
        let u = lc(&[0.1, 0.45], &[0.3, 0.7]);
        let (lo, hi) = density_ratio_extremes(&u, &rates).unwrap();
        for i in 1..200 {
            for j in 1..200 {
                let (r, s) = (i as f64 / 200.0, j as f64 / 200.0 + 0.0007);
                if r == s || [0.1, 0.45, 0.3, 0.7].contains(&r) {
                    continue;
                }
                let h = density_ratio_h(&u, r, s, &rates).unwrap();
                assert!(h <= hi * (1.0 + 1e-6) && h >= lo * (1.0 - 1e-6));
            }
        }
    }

    #[test]
    fn constant_speed_claim_envelope() {
        let rates = JumpRates::constant_speed_alternating(2.0);
        let (nu, mu) = rates.product_range();
        let u = lc(&[0.1, 0.45], &[0.3, 0.7]);
        let m = u.pair_count() as i32;
        let (lo, hi) = density_ratio_extremes(&u, &rates).unwrap();
        assert!(hi <= mu * (mu / nu).powi(m) + 1e-12);
        assert!(lo >= nu * (nu / mu).powi(m) - 1e-12);
    }

    #[test]
    fn unit_rate_nonhomogeneous_chain_accepts_everything() {
        let d = NonhomogeneousDynamics::new(JumpRates::unit(), BirthMajorant::Fixed { rate_sup: 1.0 }).unwrap();
        let mut rng = replica_rng(9, 0);
        for _ in 0..100 {
            assert!(d.propose_birth(&LatticeConfig::empty(), 1.0, &mut rng).unwrap().is_some());
        }
    }

    #[test]
    fn too_small_majorant_aborts() {
        let rates = JumpRates::constant_speed_alternating(4.0);
        let result = simulate_nonhomogeneous_chain(
            LatticeConfig::empty(),
            rates,
            BirthMajorant::Fixed { rate_sup: 0.3 },
            50.0,
            1,
        );
        let err = result.unwrap_err();
        assert!(matches!(err, Error::MajorantViolated { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn scheme_birth_area_from_empty() {
        let d = SchemeDynamics::new(10).unwrap();
        assert!((d.birth_area(&LatticeConfig::empty()) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn scheme_chain_stays_in_support() {
        let traj = simulate_scheme_chain(LatticeConfig::empty(), 5, 200.0, 8).unwrap();
        assert!(traj.n_events() > 50);
        for state in traj.states() {
            assert!(state.occupied_blocks(5).is_some());
        }
    }

    #[test]
    fn scheme_rejects_crowded_start() {
        let u = lc(&[0.01], &[0.02]);
        assert!(matches!(simulate_scheme_chain(u, 10, 1.0, 0), Err(Error::InvalidConfig(_))));
        assert!(SchemeDynamics::new(2).is_err());
    }

    #[test]
    fn ensemble_is_deterministic_and_ordered() {
        let model = ChainModel::Lattice { j_plus: 1.0, j_minus: 1.0 };
        let a = model.ensemble(5.0, 64, 17).unwrap();
        let b = model.ensemble(5.0, 64, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, r)| r.replica == i as u64));
    }

    #[test]
    fn event_json_shape() {
        let e = Event { t: 0.5, mv: PairMove { op: MoveOp::Add, r: 0.25, s: 0.75 } };
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"t":0.5,"op":"add","r":0.25,"s":0.75}"#);
    }
}
