//! Maximum-reward directed paths on the two-dimensional regular lattice.
//!
//! Vertices are pairs `(v1, v2)` of naturals; a path moves one unit along
//! either axis per step. Level `|v| = v1 + v2` counts the steps from the
//! origin, and a path crossing `n` vertices ends on level `n - 1`.
//!
//! All dynamic programs sweep one level (anti-diagonal) at a time:
//! `value(v) = r(v) + max(value(v - e1), value(v - e2))`, preferring the
//! `e1` predecessor on ties.
//!
//! Seeded fields store nothing. The reward of vertex `v` is draw number
//! `tri(|v|) + v1` of the field's random stream, so any sub-wedge of a seeded
//! field can be regenerated on demand and agrees with the full field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{Family, RewardDistribution};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub usize, pub usize);

impl Vertex {
    pub const ORIGIN: Vertex = Vertex(0, 0);

    #[inline]
    pub fn level(&self) -> usize {
        self.0 + self.1
    }
}

#[inline]
fn tri(level: usize) -> u128 {
    let l = level as u128;
    l * (l + 1) / 2
}

/// Anything that can hand out the rewards of a contiguous run of one level.
pub trait RewardSource {
    /// Writes `r(v1_start + k, level - v1_start - k)` into `out[k]`.
    fn fill_level(&mut self, level: usize, v1_start: usize, out: &mut [f64]);

    /// Number of levels available, or `None` for an unbounded field.
    fn levels(&self) -> Option<usize> {
        None
    }
}

/// A materialized wedge of rewards on levels `0..horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    horizon: usize,
    rewards: Vec<f64>,
    dist: Option<RewardDistribution>,
    seed: Option<(u64, u64)>,
}

impl LatticeField {
    /// Field whose reward at `v` is `reward(v)`, for all `|v| < horizon`.
    pub fn from_fn(horizon: usize, mut reward: impl FnMut(Vertex) -> f64) -> Self {
        let mut rewards = Vec::with_capacity(tri(horizon) as usize);
        for level in 0..horizon {
            for v1 in 0..=level {
                rewards.push(reward(Vertex(v1, level - v1)));
            }
        }
        Self { horizon, rewards, dist: None, seed: None }
    }

    /// Materializes levels `0..horizon` of the seeded field `(dist, rng)`.
    pub fn seeded(dist: RewardDistribution, horizon: usize, rng: &SeededRng) -> Self {
        let mut src = SeededLattice::new(dist, rng);
        let mut rewards = vec![0.0; tri(horizon) as usize];
        for level in 0..horizon {
            let start = tri(level) as usize;
            src.fill_level(level, 0, &mut rewards[start..start + level + 1]);
        }
        Self { horizon, rewards, dist: Some(dist), seed: Some((rng.seed(), rng.stream_id())) }
    }

    /// Number of materialized levels; vertices satisfy `|v| < horizon`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn distribution(&self) -> Option<RewardDistribution> {
        self.dist
    }

    pub fn seed(&self) -> Option<(u64, u64)> {
        self.seed
    }

    pub fn reward(&self, v: Vertex) -> Result<f64> {
        if v.level() >= self.horizon {
            return Err(Error::OutsideWedge(v.0, v.1, self.horizon));
        }
        Ok(self.rewards[(tri(v.level()) + v.0 as u128) as usize])
    }
}

impl RewardSource for LatticeField {
    fn fill_level(&mut self, level: usize, v1_start: usize, out: &mut [f64]) {
        let start = (tri(level) + v1_start as u128) as usize;
        out.copy_from_slice(&self.rewards[start..start + out.len()]);
    }

    fn levels(&self) -> Option<usize> {
        Some(self.horizon)
    }
}

/// Lazily generated i.i.d. field; nothing is stored.
#[derive(Clone, Debug)]
pub struct SeededLattice {
    dist: RewardDistribution,
    rng: SeededRng,
}

impl SeededLattice {
    pub fn new(dist: RewardDistribution, rng: &SeededRng) -> Self {
        Self { dist, rng: rng.clone() }
    }

    pub fn reward(&mut self, v: Vertex) -> f64 {
        let mut out = [0.0];
        self.fill_level(v.level(), v.0, &mut out);
        out[0]
    }
}

impl RewardSource for SeededLattice {
    #[inline]
    fn fill_level(&mut self, level: usize, v1_start: usize, out: &mut [f64]) {
        self.rng.seek_draw(tri(level) + v1_start as u128);
        for r in out.iter_mut() {
            *r = self.dist.quantile(self.rng.uniform());
        }
    }
}

/// Result of one wedge optimization.
#[derive(Clone, Debug)]
struct WedgeSolution {
    value: f64,
    end: Vertex,
    path: Vec<Vertex>,
    relaxations: u64,
}

/// Best path from `root` crossing `levels` levels (root level included).
///
/// With `include_root == false` the root's reward is not collected, which is
/// how a planning leg starts from a vertex it already collected.
fn solve_wedge<S: RewardSource + ?Sized>(
    src: &mut S,
    root: Vertex,
    levels: usize,
    include_root: bool,
    keep_path: bool,
) -> WedgeSolution {
    assert!(levels >= 1);
    let base = root.level();
    let mut rbuf = vec![0.0; levels];
    let mut prev: Vec<f64> = Vec::with_capacity(levels);
    let mut cur: Vec<f64> = Vec::with_capacity(levels);
    let mut table: Vec<f64> = if keep_path { Vec::with_capacity(tri(levels) as usize) } else { Vec::new() };
    let mut relaxations = 0u64;

    for d in 0..levels {
        let r = &mut rbuf[..=d];
        src.fill_level(base + d, root.0, r);
        cur.clear();
        if d == 0 {
            cur.push(if include_root { r[0] } else { 0.0 });
        } else {
            relaxations += 2 * d as u64;
            // (0, d): only the e2 predecessor
            cur.push(r[0] + prev[0]);
            for i in 1..d {
                let (a, b) = (prev[i - 1], prev[i]);
                cur.push(r[i] + if a >= b { a } else { b });
            }
            // (d, 0): only the e1 predecessor
            cur.push(r[d] + prev[d - 1]);
        }
        if keep_path {
            table.extend_from_slice(&cur);
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    // prev holds the last level; ties go to the larger v1
    let last = levels - 1;
    let mut best_i = last;
    for i in (0..last).rev() {
        if prev[i] > prev[best_i] {
            best_i = i;
        }
    }
    let value = prev[best_i];
    let end = Vertex(root.0 + best_i, root.1 + last - best_i);

    let mut path = Vec::new();
    if keep_path {
        let at = |d: usize, i: usize| table[tri(d) as usize + i];
        let mut i = best_i;
        path.push(end);
        for d in (1..levels).rev() {
            let e1 = (i > 0).then(|| at(d - 1, i - 1));
            let e2 = (i < d).then(|| at(d - 1, i));
            i = match (e1, e2) {
                (Some(a), Some(b)) if a >= b => i - 1,
                (Some(_), None) => i - 1,
                _ => i,
            };
            path.push(Vertex(root.0 + i, root.1 + (d - 1) - i));
        }
        path.reverse();
    }
    WedgeSolution { value, end, path, relaxations }
}

/// `T*(n)`: best total reward over monotone paths from the origin crossing
/// exactly `n` vertices (origin reward included), with one argmax path.
pub fn optimal_total_reward(field: &LatticeField, n: usize) -> Result<(f64, Vec<Vertex>)> {
    let (value, path, _) = optimal_total_reward_counted(field, n)?;
    Ok((value, path))
}

/// As [`optimal_total_reward`], also returning the number of DP edge
/// relaxations performed.
pub fn optimal_total_reward_counted(field: &LatticeField, n: usize) -> Result<(f64, Vec<Vertex>, u64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("a path crosses at least one vertex".into()));
    }
    if n > field.horizon {
        return Err(Error::InvalidArgument(format!(
            "{n} vertices requested but the field materializes only {} levels",
            field.horizon
        )));
    }
    let mut src = field.clone();
    let sol = solve_wedge(&mut src, Vertex::ORIGIN, n, true, true);
    Ok((sol.value, sol.path, sol.relaxations))
}

/// `T*(n)` value only, on any reward source, in `O(n)` memory.
pub fn t_star<S: RewardSource + ?Sized>(src: &mut S, n: usize) -> f64 {
    solve_wedge(src, Vertex::ORIGIN, n, true, false).value
}

/// `T*(v)`: best total reward over monotone paths from the origin ending at `v`.
pub fn optimal_reward_to_vertex(field: &LatticeField, v: Vertex) -> Result<f64> {
    if v.level() >= field.horizon {
        return Err(Error::OutsideWedge(v.0, v.1, field.horizon));
    }
    let mut src = field.clone();
    Ok(reward_to_vertex(&mut src, v))
}

/// `T*(v)` on any reward source: level sweep restricted to the rectangle
/// `[0, v1] x [0, v2]`.
pub fn reward_to_vertex<S: RewardSource + ?Sized>(src: &mut S, v: Vertex) -> f64 {
    let (a, b) = (v.0, v.1);
    let mut rbuf = vec![0.0; a.min(b) + 1];
    let mut prev: Vec<f64> = Vec::new();
    let mut prev_lo = 0usize;
    let mut cur: Vec<f64> = Vec::new();
    for d in 0..=a + b {
        let lo = d.saturating_sub(b);
        let hi = d.min(a);
        let r = &mut rbuf[..hi - lo + 1];
        src.fill_level(d, lo, r);
        cur.clear();
        for i in lo..=hi {
            // predecessor values on level d-1 live at index (i' - prev_lo)
            let e1 =
                (d > 0 && i > 0 && i - 1 >= prev_lo && i - 1 < prev_lo + prev.len()).then(|| prev[i - 1 - prev_lo]);
            let e2 = (d > 0 && i >= prev_lo && i < prev_lo + prev.len()).then(|| prev[i - prev_lo]);
            let best = match (e1, e2) {
                (Some(x), Some(y)) => x.max(y),
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => 0.0,
            };
            cur.push(r[i - lo] + best);
        }
        std::mem::swap(&mut prev, &mut cur);
        prev_lo = lo;
    }
    prev[0]
}

/// Closed-form shape function `g(v)`, known for exponential, geometric and
/// constant rewards.
pub fn shape_function_closed_form(dist: &RewardDistribution, v: (f64, f64)) -> Option<f64> {
    let (x, y) = v;
    match dist.family() {
        Family::Exponential { rate } => Some((x.sqrt() + y.sqrt()).powi(2) / rate),
        Family::Geometric { p } => Some((x + 2.0 * (x * y * (1.0 - p)).sqrt() + y) / p),
        Family::Constant { value } => Some((x + y) * value),
        _ => None,
    }
}

/// Limit of `E[T*(n)] / n`, equal to `mu + sigma`; known for exponential and
/// geometric rewards, and trivially for constant ones.
pub fn r_star_closed_form(dist: &RewardDistribution) -> Option<f64> {
    match dist.family() {
        Family::Exponential { .. } | Family::Geometric { .. } => {
            let m = dist.moments();
            Some(m.mean + m.std_dev)
        }
        Family::Constant { value } => Some(value),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePlanResult {
    pub total_reward: f64,
    /// Reward collected on each leg, in order.
    pub per_leg_rewards: Vec<f64>,
    pub end_vertex: Vertex,
    pub legs: usize,
    pub relaxation_count: u64,
    /// Every vertex collected, origin first.
    pub path: Vec<Vertex>,
}

/// Receding-horizon planning with sensing range `m` over a path of `n` vertices.
///
/// The first leg optimizes the `m`-level wedge at the origin. Each later leg
/// starts from the vertex the previous leg ended on and optimizes the next `m`
/// levels using only rewards within distance `m` of it. When `m` does not
/// divide `n` the last leg is `n mod m` levels deep.
pub fn iterative_plan<S: RewardSource + ?Sized>(src: &mut S, m: usize, n: usize) -> Result<LatticePlanResult> {
    if m == 0 {
        return Err(Error::InvalidArgument("sensing range must be at least 1".into()));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!("sensing range {m} exceeds path length {n}")));
    }
    if let Some(h) = src.levels() {
        if n > h {
            return Err(Error::InvalidArgument(format!("{n} vertices requested but the field has {h} levels")));
        }
    }
    let mut per_leg = Vec::with_capacity(n.div_ceil(m));
    let mut path = Vec::with_capacity(n);
    let mut relaxations = 0;
    let mut at = Vertex::ORIGIN;
    let mut collected = 0usize;
    while collected < n {
        let first = collected == 0;
        let depth = m.min(n - collected);
        let sol =
            if first { solve_wedge(src, at, depth, true, true) } else { solve_wedge(src, at, depth + 1, false, true) };
        path.extend(sol.path.iter().skip(usize::from(!first)));
        per_leg.push(sol.value);
        relaxations += sol.relaxations;
        at = sol.end;
        collected += depth;
    }
    Ok(LatticePlanResult {
        total_reward: per_leg.iter().sum(),
        legs: per_leg.len(),
        per_leg_rewards: per_leg,
        end_vertex: at,
        relaxation_count: relaxations,
        path,
    })
}

/// Halting rule for the limited-sensing experiment: stop after the first leg
/// with `T_i / m < baseline - delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub delta: f64,
    pub baseline: f64,
    pub max_steps: u64,
}

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

impl StoppingRule {
    pub fn new(delta: f64, baseline: f64, max_steps: u64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if !baseline.is_finite() {
            return Err(Error::UnsatisfiableBaseline(format!(
                "baseline {baseline} is not finite; heavy-tailed rewards need an empirical R*(m^1.1) baseline"
            )));
        }
        Ok(Self { delta, baseline, max_steps })
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        self.baseline - self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopOutcome {
    /// Lattice steps covered by the legs that met the threshold.
    pub distance: u64,
    pub legs_passed: u64,
    /// True when the run reached `max_steps` without tripping the rule.
    pub capped: bool,
}

/// Runs legs of depth `m` on a lazily generated field until one falls short of
/// the rule's threshold or the step cap is reached.
pub fn run_until_suboptimal(
    dist: &RewardDistribution,
    m: usize,
    rule: &StoppingRule,
    rng: &SeededRng,
) -> Result<StopOutcome> {
    if m == 0 {
        return Err(Error::InvalidArgument("sensing range must be at least 1".into()));
    }
    let mut src = SeededLattice::new(*dist, rng);
    let threshold = rule.threshold();
    let mut at = Vertex::ORIGIN;
    let mut legs = 0u64;
    loop {
        let distance = legs * m as u64;
        if distance >= rule.max_steps {
            return Ok(StopOutcome { distance: rule.max_steps, legs_passed: legs, capped: true });
        }
        let sol = if legs == 0 {
            solve_wedge(&mut src, at, m, true, false)
        } else {
            solve_wedge(&mut src, at, m + 1, false, false)
        };
        if sol.value / (m as f64) < threshold {
            return Ok(StopOutcome { distance, legs_passed: legs, capped: false });
        }
        legs += 1;
        at = sol.end;
    }
}

/// Monte-Carlo estimate of `E[R*(n)] = E[T*(n)] / n` over independent fields.
/// Trial `t` uses `rng.substream(t)`.
pub fn estimate_r_star(dist: &RewardDistribution, n: usize, trials: usize, rng: &SeededRng) -> Result<Estimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed for a standard error".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut src = SeededLattice::new(*dist, &rng.substream(t));
            t_star(&mut src, n) / n as f64
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Monte-Carlo estimate of `E[T*(v)]`.
pub fn estimate_reward_to_vertex(
    dist: &RewardDistribution,
    v: Vertex,
    trials: usize,
    rng: &SeededRng,
) -> Result<Estimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed for a standard error".into()));
    }
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut src = SeededLattice::new(*dist, &rng.substream(t));
            reward_to_vertex(&mut src, v)
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}
