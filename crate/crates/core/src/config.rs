//! Jump-time configuration spaces, the pair moves `Psi_{r,s}`, path
//! reconstruction and the graph metric.
//!
//! Times are `f64` values in the open interval (0, 1), stored sorted. Set
//! membership uses exact equality: all times come from continuous draws, so
//! coincidences have probability zero. A move that would produce a repeated
//! time is treated as the identity.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of points per side accepted by the BFS distance oracle.
pub const BFS_MAX_POINTS: usize = 8;

fn check_time(t: f64) -> bool {
    t.is_finite() && t > 0.0 && t < 1.0
}

fn check_move(r: f64, s: f64) -> Result<()> {
    if !check_time(r) || !check_time(s) {
        return Err(Error::InvalidMove { r, s, reason: "times must lie in (0, 1)" });
    }
    if r == s {
        return Err(Error::InvalidMove { r, s, reason: "r and s must differ" });
    }
    Ok(())
}

fn contains(sorted: &[f64], t: f64) -> bool {
    sorted.binary_search_by(|x| x.total_cmp(&t)).is_ok()
}

fn insert(sorted: &mut Vec<f64>, t: f64) {
    if let Err(pos) = sorted.binary_search_by(|x| x.total_cmp(&t)) {
        sorted.insert(pos, t);
    }
}

fn remove(sorted: &mut Vec<f64>, t: f64) {
    if let Ok(pos) = sorted.binary_search_by(|x| x.total_cmp(&t)) {
        sorted.remove(pos);
    }
}

/// `(|a \ b|, |b \ a|, |a ∩ b|)` for sorted slices.
fn overlap_counts(a: &[f64], b: &[f64]) -> (usize, usize, usize) {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].total_cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (a.len() - shared, b.len() - shared, shared)
}

fn sorted_strict(times: &[f64]) -> bool {
    times.windows(2).all(|w| w[0] < w[1])
}

fn normalize(mut times: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if let Some(t) = times.iter().find(|t| !check_time(**t)) {
        return Err(Error::InvalidConfig(format!("{what} time {t} outside (0, 1)")));
    }
    times.sort_by(f64::total_cmp);
    if !sorted_strict(&times) {
        return Err(Error::InvalidConfig(format!("repeated {what} time")));
    }
    Ok(times)
}

/// Jump times of a bridge of the walk on `{0, 1}`: an even-cardinality
/// finite subset of (0, 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HypercubeRepr", into = "HypercubeRepr")]
pub struct HypercubeConfig {
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypercubeRepr {
    times: Vec<f64>,
}

impl TryFrom<HypercubeRepr> for HypercubeConfig {
    type Error = Error;
    fn try_from(r: HypercubeRepr) -> Result<Self> {
        Self::new(r.times)
    }
}

impl From<HypercubeConfig> for HypercubeRepr {
    fn from(c: HypercubeConfig) -> Self {
        HypercubeRepr { times: c.times }
    }
}

impl HypercubeConfig {
    /// Builds a configuration from times in any order.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        let times = normalize(times, "jump")?;
        if times.len() % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "hypercube configuration needs an even number of times, got {}",
                times.len()
            )));
        }
        Ok(Self { times })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        contains(&self.times, t)
    }

    /// `|U| / 2`, the distance to the empty configuration.
    pub fn pair_count(&self) -> usize {
        self.times.len() / 2
    }

    /// `Psi_{r,s}`: adds `{r, s}` if both are absent, removes them if both
    /// are present, identity otherwise.
    pub fn apply_move(&self, r: f64, s: f64) -> Result<Self> {
        check_move(r, s)?;
        let mut next = self.clone();
        next.apply_in_place(r, s);
        Ok(next)
    }

    /// Unchecked in-place move; `r != s` inside (0, 1) is the caller's job.
    pub(crate) fn apply_in_place(&mut self, r: f64, s: f64) -> MoveEffect {
        match (self.contains(r), self.contains(s)) {
            (false, false) => {
                insert(&mut self.times, r);
                insert(&mut self.times, s);
                MoveEffect::Added
            }
            (true, true) => {
                remove(&mut self.times, r);
                remove(&mut self.times, s);
                MoveEffect::Removed
            }
            _ => MoveEffect::Identity,
        }
    }

    /// Closed-form graph distance: with `p = |a \ b|`, `q = |b \ a|`, it is
    /// `(p + q) / 2`, plus one when `p` is odd.
    pub fn graph_distance(&self, other: &Self) -> u64 {
        let (p, q, _) = overlap_counts(&self.times, &other.times);
        hypercube_closed_form(p, q)
    }

    /// Shortest-path distance computed by breadth-first search over the
    /// abstract overlap pattern.
    pub fn graph_distance_bfs(&self, other: &Self) -> Result<u64> {
        if self.len() > BFS_MAX_POINTS || other.len() > BFS_MAX_POINTS {
            return Err(Error::OracleScale(format!(
                "{} and {} points exceed the limit of {BFS_MAX_POINTS}",
                self.len(),
                other.len()
            )));
        }
        let (p, q, k) = overlap_counts(&self.times, &other.times);
        Ok(hypercube_bfs_distance(p, q, k))
    }
}

/// Jump times of a bridge of a walk on `Z`: up-jump times and down-jump
/// times, equally many, no time in both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct LatticeConfig {
    up: Vec<f64>,
    down: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeRepr {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl TryFrom<LatticeRepr> for LatticeConfig {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        Self::new(r.up, r.down)
    }
}

impl From<LatticeConfig> for LatticeRepr {
    fn from(c: LatticeConfig) -> Self {
        LatticeRepr { up: c.up, down: c.down }
    }
}

/// What a pair move did to a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveEffect {
    Added,
    Removed,
    Identity,
}

impl LatticeConfig {
    pub fn new(up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        let up = normalize(up, "up")?;
        let down = normalize(down, "down")?;
        if up.len() != down.len() {
            return Err(Error::InvalidConfig(format!(
                "{} up times but {} down times",
                up.len(),
                down.len()
            )));
        }
        if let Some(t) = up.iter().find(|t| contains(&down, **t)) {
            return Err(Error::InvalidConfig(format!("time {t} is both an up and a down jump")));
        }
        Ok(Self { up, down })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn up(&self) -> &[f64] {
        &self.up
    }

    pub fn down(&self) -> &[f64] {
        &self.down
    }

    /// `|U+|`, which equals `|U-|` and the distance to the empty configuration.
    pub fn pair_count(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn has_up(&self, t: f64) -> bool {
        contains(&self.up, t)
    }

    pub fn has_down(&self, t: f64) -> bool {
        contains(&self.down, t)
    }

    /// `Psi_{r,s}`: adds `r` to the up times and `s` to the down times if
    /// neither is present, removes both if both are present, identity
    /// otherwise.
    pub fn apply_move(&self, r: f64, s: f64) -> Result<Self> {
        check_move(r, s)?;
        let mut next = self.clone();
        next.apply_in_place(r, s);
        Ok(next)
    }

    pub(crate) fn apply_in_place(&mut self, r: f64, s: f64) -> MoveEffect {
        match (self.has_up(r), self.has_down(s)) {
            (false, false) => {
                // a time may not be both an up and a down jump
                if self.has_down(r) || self.has_up(s) {
                    return MoveEffect::Identity;
                }
                insert(&mut self.up, r);
                insert(&mut self.down, s);
                MoveEffect::Added
            }
            (true, true) => {
                remove(&mut self.up, r);
                remove(&mut self.down, s);
                MoveEffect::Removed
            }
            _ => MoveEffect::Identity,
        }
    }

    /// Closed-form graph distance `max(p+, p-) + max(q+, q-)` where
    /// `p± = |a± \ b±|` and `q± = |b± \ a±|`.
    pub fn graph_distance(&self, other: &Self) -> u64 {
        let (pu, qu, _) = overlap_counts(&self.up, &other.up);
        let (pd, qd, _) = overlap_counts(&self.down, &other.down);
        lattice_closed_form(pu, qu, pd, qd)
    }

    pub fn graph_distance_bfs(&self, other: &Self) -> Result<u64> {
        let biggest = self.up.len().max(other.up.len());
        if biggest > BFS_MAX_POINTS {
            return Err(Error::OracleScale(format!(
                "{biggest} points per side exceed the limit of {BFS_MAX_POINTS}"
            )));
        }
        let (pu, qu, ku) = overlap_counts(&self.up, &other.up);
        let (pd, qd, kd) = overlap_counts(&self.down, &other.down);
        Ok(lattice_bfs_distance(
            SideCounts { only_current: pu, only_target: qu, shared: ku },
            SideCounts { only_current: pd, only_target: qd, shared: kd },
        ))
    }

    /// All jump times merged in time order, with their signs.
    pub fn signed_jumps(&self) -> Vec<(f64, i8)> {
        let mut jumps: Vec<(f64, i8)> = self
            .up
            .iter()
            .map(|&t| (t, 1))
            .chain(self.down.iter().map(|&t| (t, -1)))
            .collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        jumps
    }

    /// The bridge path `X` with these jump times.
    pub fn reconstruct_path(&self) -> PathZ {
        let jumps = self.signed_jumps();
        PathZ {
            jump_times: jumps.iter().map(|j| j.0).collect(),
            jump_signs: jumps.iter().map(|j| j.1).collect(),
        }
    }

    /// Indices of the blocks `((j-1)/N, j/N]` holding at most one jump each,
    /// or `None` if some block holds two or more.
    pub fn occupied_blocks(&self, n_blocks: usize) -> Option<Vec<usize>> {
        let mut seen = vec![false; n_blocks + 1];
        let mut blocks = Vec::with_capacity(2 * self.up.len());
        for &t in self.up.iter().chain(self.down.iter()) {
            let b = block_index(t, n_blocks);
            if seen[b] {
                return None;
            }
            seen[b] = true;
            blocks.push(b);
        }
        Some(blocks)
    }
}

/// `ceil(t N)`, the 1-based index of the block `((j-1)/N, j/N]` holding `t`.
pub fn block_index(t: f64, n_blocks: usize) -> usize {
    ((t * n_blocks as f64).ceil() as usize).clamp(1, n_blocks)
}

/// A piecewise-constant càdlàg bridge on `[0, 1]` with ±1 jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct PathZ {
    pub jump_times: Vec<f64>,
    pub jump_signs: Vec<i8>,
}

impl PathZ {
    /// Value at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> i64 {
        self.jump_times
            .iter()
            .zip(&self.jump_signs)
            .take_while(|(&u, _)| u <= t)
            .map(|(_, &s)| s as i64)
            .sum()
    }

    pub fn initial_value(&self) -> i64 {
        0
    }

    pub fn final_value(&self) -> i64 {
        self.jump_signs.iter().map(|&s| s as i64).sum()
    }

    /// Maximal constancy intervals `(start, end, level)` covering `[0, 1]`.
    pub fn segments(&self) -> Vec<(f64, f64, i64)> {
        let mut out = Vec::with_capacity(self.jump_times.len() + 1);
        let mut start = 0.0;
        let mut level = 0i64;
        for (&t, &s) in self.jump_times.iter().zip(&self.jump_signs) {
            out.push((start, t, level));
            start = t;
            level += s as i64;
        }
        out.push((start, 1.0, level));
        out
    }

    /// Recovers the configuration of jump times.
    pub fn to_config(&self) -> Result<LatticeConfig> {
        let mut up = Vec::new();
        let mut down = Vec::new();
        for (&t, &s) in self.jump_times.iter().zip(&self.jump_signs) {
            match s {
                1 => up.push(t),
                -1 => down.push(t),
                other => return Err(Error::InvalidConfig(format!("jump of size {other}"))),
            }
        }
        LatticeConfig::new(up, down)
    }
}

/// Either kind of configuration, as read from JSON: `{"times": [...]}` or
/// `{"up": [...], "down": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyConfig {
    Hypercube(HypercubeConfig),
    Lattice(LatticeConfig),
}

impl AnyConfig {
    pub fn apply_move(&self, r: f64, s: f64) -> Result<Self> {
        Ok(match self {
            AnyConfig::Hypercube(c) => AnyConfig::Hypercube(c.apply_move(r, s)?),
            AnyConfig::Lattice(c) => AnyConfig::Lattice(c.apply_move(r, s)?),
        })
    }

    pub fn graph_distance(&self, other: &Self) -> Result<u64> {
        match (self, other) {
            (AnyConfig::Hypercube(a), AnyConfig::Hypercube(b)) => Ok(a.graph_distance(b)),
            (AnyConfig::Lattice(a), AnyConfig::Lattice(b)) => Ok(a.graph_distance(b)),
            _ => Err(Error::VariantMismatch),
        }
    }

    pub fn graph_distance_bfs(&self, other: &Self) -> Result<u64> {
        match (self, other) {
            (AnyConfig::Hypercube(a), AnyConfig::Hypercube(b)) => a.graph_distance_bfs(b),
            (AnyConfig::Lattice(a), AnyConfig::Lattice(b)) => a.graph_distance_bfs(b),
            _ => Err(Error::VariantMismatch),
        }
    }

    pub fn pair_count(&self) -> usize {
        match self {
            AnyConfig::Hypercube(c) => c.pair_count(),
            AnyConfig::Lattice(c) => c.pair_count(),
        }
    }
}

impl From<HypercubeConfig> for AnyConfig {
    fn from(c: HypercubeConfig) -> Self {
        AnyConfig::Hypercube(c)
    }
}

impl From<LatticeConfig> for AnyConfig {
    fn from(c: LatticeConfig) -> Self {
        AnyConfig::Lattice(c)
    }
}

/// Closed-form hypercube distance from the overlap counts.
pub fn hypercube_closed_form(only_a: usize, only_b: usize) -> u64 {
    let base = ((only_a + only_b) / 2) as u64;
    if only_a % 2 == 1 {
        base + 1
    } else {
        base
    }
}

/// Closed-form lattice distance from per-side overlap counts.
pub fn lattice_closed_form(up_a: usize, up_b: usize, down_a: usize, down_b: usize) -> u64 {
    (up_a.max(down_a) + up_b.max(down_b)) as u64
}

/// Shortest path between a current even set and a target, in terms of
/// `only_current` points (to be removed), `only_target` points (to be
/// added) and `shared` points. Moves remove two present points or add two
/// absent ones (target points or fresh points that must later be removed).
pub fn hypercube_bfs_distance(only_current: usize, only_target: usize, shared: usize) -> u64 {
    // fresh points never help beyond a couple of pairs; cap the search
    let cap = only_current + only_target + shared + 4;
    let start = (only_current, only_target, shared);
    let mut dist: HashMap<(usize, usize, usize), u64> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(state @ (x, y, k)) = queue.pop_front() {
        let d = dist[&state];
        if x == 0 && y == 0 {
            return d;
        }
        let mut next = Vec::with_capacity(6);
        if x >= 2 {
            next.push((x - 2, y, k));
        }
        if x >= 1 && k >= 1 {
            next.push((x - 1, y + 1, k - 1));
        }
        if k >= 2 {
            next.push((x, y + 2, k - 2));
        }
        if y >= 2 {
            next.push((x, y - 2, k + 2));
        }
        if y >= 1 {
            next.push((x + 1, y - 1, k + 1));
        }
        next.push((x + 2, y, k));
        for s in next {
            if s.0 <= cap && !dist.contains_key(&s) {
                dist.insert(s, d + 1);
                queue.push_back(s);
            }
        }
    }
    unreachable!("the move graph is connected")
}

/// Overlap counts for one side (up or down) of a lattice configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SideCounts {
    pub only_current: usize,
    pub only_target: usize,
    pub shared: usize,
}

impl SideCounts {
    fn removals(self) -> Vec<SideCounts> {
        let mut out = Vec::with_capacity(2);
        if self.only_current > 0 {
            out.push(SideCounts { only_current: self.only_current - 1, ..self });
        }
        if self.shared > 0 {
            out.push(SideCounts {
                shared: self.shared - 1,
                only_target: self.only_target + 1,
                ..self
            });
        }
        out
    }

    fn additions(self) -> Vec<SideCounts> {
        let mut out = Vec::with_capacity(2);
        if self.only_target > 0 {
            out.push(SideCounts {
                only_target: self.only_target - 1,
                shared: self.shared + 1,
                ..self
            });
        }
        out.push(SideCounts { only_current: self.only_current + 1, ..self });
        out
    }
}

/// BFS distance for the lattice move graph, where a move removes one present
/// up point together with one present down point, or adds one absent up
/// point together with one absent down point.
pub fn lattice_bfs_distance(up: SideCounts, down: SideCounts) -> u64 {
    let cap = up.only_current + up.only_target + up.shared + 4;
    let mut dist: HashMap<(SideCounts, SideCounts), u64> = HashMap::from([((up, down), 0)]);
    let mut queue = VecDeque::from([(up, down)]);
    while let Some(state @ (u, d)) = queue.pop_front() {
        let dd = dist[&state];
        if u.only_current == 0 && u.only_target == 0 && d.only_current == 0 && d.only_target == 0 {
            return dd;
        }
        let mut next = Vec::new();
        for nu in u.removals() {
            for nd in d.removals() {
                next.push((nu, nd));
            }
        }
        for nu in u.additions() {
            for nd in d.additions() {
                next.push((nu, nd));
            }
        }
        for s in next {
            if s.0.only_current <= cap && s.1.only_current <= cap && !dist.contains_key(&s) {
                dist.insert(s, dd + 1);
                queue.push_back(s);
            }
        }
    }
    unreachable!("the move graph is connected")
}
