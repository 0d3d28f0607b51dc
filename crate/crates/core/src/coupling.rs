//! Coalescing coupling of two chains started at neighboring configurations.
//!
//! Start from `V` and `U = Psi_{r,s} V`, and call the larger of the two the
//! leading chain. The leading chain is simulated as usual; every jump is
//! mirrored on the other chain through shared clocks:
//!
//! * births are shared;
//! * a death of a pair present in both chains is shared;
//! * the death of the extra pair `{r, s}` makes the chains coincide;
//! * the death of a pair mixing one extra point with a common point `u`
//!   leaves the other chain alone. The leading chain now holds a point `ζ`
//!   (the surviving extra point) where the other holds `η = u`. From then on
//!   the clock of each leading pair `{ζ, v}` drives the pair `{η, v}` of the
//!   other chain, so the first such ring makes the chains coincide.
//!
//! Swapping which exponential clock drives which pair keeps each marginal a
//! copy of the single chain (the clocks are i.i.d. and memoryless). The
//! distance between the chains is 1 before the first time `T_m` a clock
//! touching `{r, s}` rings, 2 until the coalescence time `T_M`, and 0 after.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Dynamics, HypercubeDynamics, LatticeDynamics, MoveOp, PairMove};
use crate::config::{AnyConfig, HypercubeConfig, LatticeConfig, MoveEffect};
use crate::error::{invalid, Error, Result};
use crate::oracles::{BridgeLaw, BridgeSampler};
use crate::rng::{exponential, open01, replica_rng, SimRng};
use crate::stats::RunningStats;

/// The homogeneous chains that admit the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CouplingModel {
    Hypercube { alpha: f64 },
    Lattice { j_plus: f64, j_minus: f64 },
}

impl CouplingModel {
    fn bridge_law(&self) -> BridgeLaw {
        match *self {
            CouplingModel::Hypercube { alpha } => BridgeLaw::Hypercube { alpha },
            CouplingModel::Lattice { j_plus, j_minus } => BridgeLaw::Lattice { j_plus, j_minus },
        }
    }
}

/// Which side of a lattice configuration holds the displaced point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    /// Leading chain = other chain plus the pair `(r, s)`.
    Before { r: f64, s: f64 },
    /// Leading chain = other chain with `eta` replaced by `zeta`.
    Switched { zeta: f64, eta: f64, side: Side },
    Coalesced,
}

/// What the follower does in response to a death in the leading chain.
struct Response {
    follower: Option<PairMove>,
    next: Phase,
}

fn same(mv: &PairMove, phase: Phase) -> Response {
    Response { follower: Some(*mv), next: phase }
}

fn removal(a: f64, b: f64) -> PairMove {
    PairMove { op: MoveOp::Remove, r: a, s: b }
}

impl Phase {
    fn respond_hypercube(self, mv: &PairMove) -> Response {
        let (a, b) = (mv.r, mv.s);
        match self {
            Phase::Before { r, s } => {
                let hits = |x: f64| x == r || x == s;
                let other = |x: f64| if x == r { s } else { r };
                match (hits(a), hits(b)) {
                    (true, true) => Response { follower: None, next: Phase::Coalesced },
                    (true, false) => Response {
                        follower: None,
                        next: Phase::Switched { zeta: other(a), eta: b, side: Side::Up },
                    },
                    (false, true) => Response {
                        follower: None,
                        next: Phase::Switched { zeta: other(b), eta: a, side: Side::Up },
                    },
                    (false, false) => same(mv, self),
                }
            }
            Phase::Switched { zeta, eta, .. } => {
                if a == zeta || b == zeta {
                    let v = if a == zeta { b } else { a };
                    Response { follower: Some(removal(eta.min(v), eta.max(v))), next: Phase::Coalesced }
                } else {
                    same(mv, self)
                }
            }
            Phase::Coalesced => same(mv, self),
        }
    }

    fn respond_lattice(self, mv: &PairMove) -> Response {
        let (up, down) = (mv.r, mv.s);
        match self {
            Phase::Before { r, s } => match (up == r, down == s) {
                (true, true) => Response { follower: None, next: Phase::Coalesced },
                (true, false) => Response {
                    follower: None,
                    next: Phase::Switched { zeta: s, eta: down, side: Side::Down },
                },
                (false, true) => Response {
                    follower: None,
                    next: Phase::Switched { zeta: r, eta: up, side: Side::Up },
                },
                (false, false) => same(mv, self),
            },
            Phase::Switched { zeta, eta, side: Side::Down } if down == zeta => {
                Response { follower: Some(removal(up, eta)), next: Phase::Coalesced }
            }
            Phase::Switched { zeta, eta, side: Side::Up } if up == zeta => {
                Response { follower: Some(removal(eta, down)), next: Phase::Coalesced }
            }
            _ => same(mv, self),
        }
    }
}

/// One jump of the coupled pair; `None` means that chain did not move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEvent {
    pub t: f64,
    pub u_move: Option<PairMove>,
    pub v_move: Option<PairMove>,
}

impl CoupledEvent {
    pub fn touches_both(&self) -> bool {
        self.u_move.is_some() && self.v_move.is_some()
    }
}

/// A coupled run from `U_0 = Psi_{r,s} V_0` and `V_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory<S> {
    pub u0: S,
    pub v0: S,
    pub events: Vec<CoupledEvent>,
    /// First time a clock touching `{r, s}` rang, if before `t_end`.
    pub t_m: Option<f64>,
    /// Coalescence time, if before `t_end`.
    pub t_big_m: Option<f64>,
    pub u_final: S,
    pub v_final: S,
    pub t_end: f64,
}

impl<S> CoupledTrajectory<S> {
    pub fn coalesced(&self) -> bool {
        self.t_big_m.is_some()
    }

    /// `1{t < T_m} + 2 1{T_m <= t < T_M}`.
    pub fn distance_at(&self, t: f64) -> u64 {
        coupling_distance(self.t_m, self.t_big_m, t)
    }

    pub fn u_event_count(&self) -> usize {
        self.events.iter().filter(|e| e.u_move.is_some()).count()
    }

    pub fn v_event_count(&self) -> usize {
        self.events.iter().filter(|e| e.v_move.is_some()).count()
    }
}

/// Distance between the coupled chains at `t` given their coupling times.
pub fn coupling_distance(t_m: Option<f64>, t_big_m: Option<f64>, t: f64) -> u64 {
    match (t_m, t_big_m) {
        (_, Some(tc)) if t >= tc => 0,
        (Some(tm), _) if t >= tm => 2,
        _ => 1,
    }
}

/// State of a configuration type that the coupling can drive.
pub trait CouplingSpace: Clone + PartialEq {
    type Dyn: Dynamics<State = Self, Move = PairMove>;
    fn dynamics(model: &CouplingModel) -> Result<Self::Dyn>;
    fn apply(&mut self, mv: &PairMove) -> MoveEffect;
    fn is_lattice() -> bool;
}

impl CouplingSpace for HypercubeConfig {
    type Dyn = HypercubeDynamics;
    fn dynamics(model: &CouplingModel) -> Result<HypercubeDynamics> {
        match *model {
            CouplingModel::Hypercube { alpha } => HypercubeDynamics::new(alpha),
            _ => Err(Error::VariantMismatch),
        }
    }
    fn apply(&mut self, mv: &PairMove) -> MoveEffect {
        self.apply_in_place(mv.r, mv.s)
    }
    fn is_lattice() -> bool {
        false
    }
}

impl CouplingSpace for LatticeConfig {
    type Dyn = LatticeDynamics;
    fn dynamics(model: &CouplingModel) -> Result<LatticeDynamics> {
        match *model {
            CouplingModel::Lattice { j_plus, j_minus } => LatticeDynamics::new(j_plus, j_minus),
            _ => Err(Error::VariantMismatch),
        }
    }
    fn apply(&mut self, mv: &PairMove) -> MoveEffect {
        self.apply_in_place(mv.r, mv.s)
    }
    fn is_lattice() -> bool {
        true
    }
}

/// Runs the coupled pair up to `t_end`, calling `observe` after each jump.
/// With `stop_at_coalescence` the run ends at `T_M`.
fn run_coupled<S: CouplingSpace>(
    model: &CouplingModel,
    v0: &S,
    r: f64,
    s: f64,
    t_end: f64,
    stop_at_coalescence: bool,
    rng: &mut SimRng,
    mut observe: impl FnMut(CoupledEvent, &S, &S),
) -> Result<(Option<f64>, Option<f64>, S, S)> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    if r == s || !(r > 0.0 && r < 1.0 && s > 0.0 && s < 1.0) {
        return Err(Error::InvalidMove { r, s, reason: "times must be distinct and in (0, 1)" });
    }
    let dynamics = S::dynamics(model)?;
    let mut u = v0.clone();
    let u_leads = match u.apply(&PairMove { op: MoveOp::Add, r, s }) {
        MoveEffect::Added => true,
        MoveEffect::Removed => false,
        MoveEffect::Identity => {
            return Err(Error::InvalidMove { r, s, reason: "Psi_{r,s} leaves the start unchanged" })
        }
    };
    let (mut lead, mut follow) = if u_leads { (u, v0.clone()) } else { (v0.clone(), u) };
    let start = Phase::Before { r, s };
    let mut phase = start;
    let (mut t_m, mut t_big_m) = (None, None);
    let mut t = 0.0;
    loop {
        let (birth, death) = dynamics.rates(&lead)?;
        let total = birth + death;
        if total <= 0.0 {
            break;
        }
        t += exponential(rng, total);
        if t > t_end {
            break;
        }
        let (lead_move, follow_move) = if rng.random::<f64>() * total < birth {
            let mv = dynamics.propose_birth(&lead, birth, rng)?.expect("homogeneous births are never thinned");
            (mv, Some(mv))
        } else {
            let mv = dynamics.propose_death(&lead, rng);
            let response =
                if S::is_lattice() { phase.respond_lattice(&mv) } else { phase.respond_hypercube(&mv) };
            if phase == start && response.next != phase {
                t_m = Some(t);
            }
            if response.next == Phase::Coalesced && phase != Phase::Coalesced {
                t_big_m = Some(t);
            }
            phase = response.next;
            (mv, response.follower)
        };
        let lead_moved = lead.apply(&lead_move) != MoveEffect::Identity;
        let follow_moved = match follow_move {
            Some(mv) => follow.apply(&mv) != MoveEffect::Identity,
            None => false,
        };
        if phase == Phase::Coalesced {
            debug_assert!(lead == follow, "coupled chains must coincide after coalescence");
        }
        let lead_mv = lead_moved.then_some(lead_move);
        let follow_mv = if follow_moved { follow_move } else { None };
        if lead_mv.is_some() || follow_mv.is_some() {
            let (u_move, v_move) = if u_leads { (lead_mv, follow_mv) } else { (follow_mv, lead_mv) };
            let (u_now, v_now) = if u_leads { (&lead, &follow) } else { (&follow, &lead) };
            observe(CoupledEvent { t, u_move, v_move }, u_now, v_now);
        }
        if stop_at_coalescence && t_big_m.is_some() {
            break;
        }
    }
    let (u_final, v_final) = if u_leads { (lead, follow) } else { (follow, lead) };
    Ok((t_m, t_big_m, u_final, v_final))
}

/// Simulates the coupling from `V` and `Psi_{r,s} V` up to `t_end`,
/// recording every jump.
pub fn simulate_coupled<S: CouplingSpace>(
    model: &CouplingModel,
    v0: S,
    r: f64,
    s: f64,
    t_end: f64,
    seed: u64,
) -> Result<CoupledTrajectory<S>> {
    simulate_coupled_with(model, v0, r, s, t_end, &mut replica_rng(seed, 0))
}

pub fn simulate_coupled_with<S: CouplingSpace>(
    model: &CouplingModel,
    v0: S,
    r: f64,
    s: f64,
    t_end: f64,
    rng: &mut SimRng,
) -> Result<CoupledTrajectory<S>> {
    let mut events = Vec::new();
    let mut u0 = v0.clone();
    u0.apply(&PairMove { op: MoveOp::Add, r, s });
    let (t_m, t_big_m, u_final, v_final) =
        run_coupled(model, &v0, r, s, t_end, false, rng, |e, _, _| events.push(e))?;
    Ok(CoupledTrajectory { u0, v0, events, t_m, t_big_m, u_final, v_final, t_end })
}

/// Coupling times only, stopping at coalescence.
pub fn coupling_times<S: CouplingSpace>(
    model: &CouplingModel,
    v0: &S,
    r: f64,
    s: f64,
    t_end: f64,
    rng: &mut SimRng,
) -> Result<(Option<f64>, Option<f64>)> {
    let (t_m, t_big_m, _, _) = run_coupled(model, v0, r, s, t_end, true, rng, |_, _, _| {})?;
    Ok((t_m, t_big_m))
}

/// Where coupled runs start.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    /// A fixed `V` and move `(r, s)`.
    Fixed { v: AnyConfig, r: f64, s: f64 },
    /// `V` drawn from the exact bridge law of the model and `(r, s)` uniform,
    /// independently per replica.
    Stationary,
}

/// One point of a contraction curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionPoint {
    pub t: f64,
    pub mean_d: f64,
    pub se: f64,
    /// `4 e^{-t/2} + e^{-t}`.
    pub bound: f64,
}

/// The contraction bound `4 e^{-t/2} + e^{-t}` for neighboring starts.
pub fn contraction_bound(t: f64) -> f64 {
    4.0 * (-t / 2.0).exp() + (-t).exp()
}

/// Coupling times of `replicas` independent runs up to `t_end`; replica `k`
/// uses stream `k` of `seed`.
pub fn sample_coupling_times(
    model: &CouplingModel,
    start: &StartSpec,
    t_end: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<(Option<f64>, Option<f64>)>> {
    let sampler = BridgeSampler::new(model.bridge_law())?;
    (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(seed, k);
            let (v, r, s) = match start {
                StartSpec::Fixed { v, r, s } => (v.clone(), *r, *s),
                StartSpec::Stationary => {
                    let v = sampler.sample(&mut rng);
                    (v, open01(&mut rng), open01(&mut rng))
                }
            };
            match (model, v) {
                (CouplingModel::Hypercube { .. }, AnyConfig::Hypercube(v)) => {
                    coupling_times(model, &v, r, s, t_end, &mut rng)
                }
                (CouplingModel::Lattice { .. }, AnyConfig::Lattice(v)) => {
                    coupling_times(model, &v, r, s, t_end, &mut rng)
                }
                _ => Err(Error::VariantMismatch),
            }
        })
        .collect()
}

/// Monte Carlo estimate of `E d(U_t, V_t)` on `t_grid`.
pub fn estimate_contraction(
    model: &CouplingModel,
    start: &StartSpec,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<ContractionPoint>> {
    if t_grid.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if replicas < 100 {
        return Err(invalid(format!("need at least 100 replicas, got {replicas}")));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(invalid(format!("grid time {t} is not a finite nonnegative number")));
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let times = sample_coupling_times(model, start, horizon, replicas, seed)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let stats: RunningStats =
                times.iter().map(|&(tm, tc)| coupling_distance(tm, tc, t) as f64).collect();
            ContractionPoint { t, mean_d: stats.mean(), se: stats.std_error(), bound: contraction_bound(t) }
        })
        .collect())
}
