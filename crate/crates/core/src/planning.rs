//! Maximum-reward planning over continuous target fields.
//!
//! A robot moving with unit longitudinal speed and lateral speed at most
//! `alpha` can go from `a` to `b` iff `b.p1 > a.p1` and
//! `|b.p2 - a.p2| <= alpha * (b.p1 - a.p1)`. Planning is a longest-path
//! problem on the resulting DAG of targets ordered by `p1`.
//!
//! Two solvers compute the same optimum. [`Solver::Scan`] relaxes every pair
//! of candidates and is the reference for workload accounting.
//! [`Solver::Dominance`] maps the cone to the positive quadrant of
//! `u = p1 + p2 / alpha`, `w = p1 - p2 / alpha` and answers each target with
//! a prefix-maximum query, in `O(N log N)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::RewardDistribution;
use crate::error::{Error, Result};
use crate::lattice::StoppingRule;
use crate::poisson::{MarkedPointField, Region, Target, TargetSource, TiledPoissonField};
use crate::rng::SeededRng;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x1: f64,
    pub x2: f64,
}

impl RobotState {
    pub const ORIGIN: RobotState = RobotState { x1: 0.0, x2: 0.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPlan {
    pub start: RobotState,
    pub visited: Vec<Target>,
    pub total_reward: f64,
    /// Longitudinal end of the planning window; `x2` is held from the last
    /// visited target.
    pub end_state: RobotState,
}

impl ContinuousPlan {
    fn empty(start: RobotState, x1_end: f64) -> Self {
        Self { start, visited: Vec::new(), total_reward: 0.0, end_state: RobotState { x1: x1_end, x2: start.x2 } }
    }

    /// Checks the cone constraint along the whole plan and the reward sum.
    pub fn is_feasible(&self, alpha: f64) -> bool {
        let mut at = self.start;
        for t in &self.visited {
            if !(t.p1 > at.x1) || !reachable(at, t, alpha) {
                return false;
            }
            at = RobotState { x1: t.p1, x2: t.p2 };
        }
        let sum: f64 = self.visited.iter().map(|t| t.reward).sum();
        sum == self.total_reward
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkloadCounters {
    /// Candidate pairs examined by the pairwise scan.
    pub dp_relaxations: u64,
    pub planner_calls: u64,
    pub targets_visited: u64,
    /// Cone-feasible candidates handed to the planner, summed over calls.
    pub candidates_seen: u64,
    pub distance: f64,
}

impl WorkloadCounters {
    pub fn merge(&mut self, other: &WorkloadCounters) {
        self.dp_relaxations += other.dp_relaxations;
        self.planner_calls += other.planner_calls;
        self.targets_visited += other.targets_visited;
        self.candidates_seen += other.candidates_seen;
        self.distance += other.distance;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Scan,
    Dominance,
}

/// Closed-cone reachability of `to` from `from`.
#[inline]
pub fn reachable(from: RobotState, to: &Target, alpha: f64) -> bool {
    let dx = to.p1 - from.x1;
    dx >= 0.0 && (to.p2 - from.x2).abs() <= alpha * dx
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("agility must be positive, got {alpha}")))
    }
}

/// Cone-feasible candidates in `(start.x1, start.x1 + horizon]`, by `p1`.
fn candidates(targets: &[Target], start: RobotState, horizon: f64, alpha: f64) -> Vec<Target> {
    let hi = start.x1 + horizon;
    targets.iter().filter(|t| t.p1 > start.x1 && t.p1 <= hi && reachable(start, t, alpha)).copied().collect()
}

/// Indices of the best chain through `cands`, in order.
fn chain_scan(cands: &[Target], alpha: f64) -> Vec<usize> {
    let n = cands.len();
    let mut value = vec![0.0f64; n];
    let mut pred = vec![usize::MAX; n];
    for j in 0..n {
        let b = &cands[j];
        let mut best = 0.0;
        let mut arg = usize::MAX;
        for i in 0..j {
            let a = &cands[i];
            if (b.p2 - a.p2).abs() <= alpha * (b.p1 - a.p1) && value[i] > best {
                best = value[i];
                arg = i;
            }
        }
        value[j] = best + b.reward;
        pred[j] = arg;
    }
    backtrack(&value, &pred)
}

fn backtrack(value: &[f64], pred: &[usize]) -> Vec<usize> {
    let mut end = usize::MAX;
    let mut best = 0.0;
    for (j, &v) in value.iter().enumerate() {
        if v > best {
            best = v;
            end = j;
        }
    }
    let mut chain = Vec::new();
    while end != usize::MAX {
        chain.push(end);
        end = pred[end];
    }
    chain.reverse();
    chain
}

/// Max-Fenwick tree over ranks, holding `(value, index)`.
struct MaxTree {
    tree: Vec<(f64, usize)>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        Self { tree: vec![(0.0, usize::MAX); n + 1] }
    }

    fn update(&mut self, rank: usize, item: (f64, usize)) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            if item.0 > self.tree[i].0 {
                self.tree[i] = item;
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Best item over ranks `0..=rank`.
    fn query(&self, rank: usize) -> (f64, usize) {
        let mut i = rank + 1;
        let mut best = (0.0, usize::MAX);
        while i > 0 {
            if self.tree[i].0 > best.0 {
                best = self.tree[i];
            }
            i -= i & i.wrapping_neg();
        }
        best
    }
}

fn chain_dominance(cands: &[Target], alpha: f64) -> Vec<usize> {
    let n = cands.len();
    let u: Vec<f64> = cands.iter().map(|t| t.p1 + t.p2 / alpha).collect();
    let w: Vec<f64> = cands.iter().map(|t| t.p1 - t.p2 / alpha).collect();
    let mut by_w: Vec<usize> = (0..n).collect();
    by_w.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    // equal w share the highest rank among them so the query includes them
    let mut rank = vec![0usize; n];
    let mut k = 0;
    while k < n {
        let mut e = k;
        while e + 1 < n && w[by_w[e + 1]] == w[by_w[k]] {
            e += 1;
        }
        for &i in &by_w[k..=e] {
            rank[i] = e;
        }
        k = e + 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(w[a].total_cmp(&w[b])));
    let mut tree = MaxTree::new(n);
    let mut value = vec![0.0f64; n];
    let mut pred = vec![usize::MAX; n];
    for &j in &order {
        let (best, arg) = tree.query(rank[j]);
        value[j] = best + cands[j].reward;
        pred[j] = arg;
        tree.update(rank[j], (value[j], j));
    }
    backtrack(&value, &pred)
}

/// Number of candidate pairs the pairwise scan examines for `n` candidates.
#[inline]
pub fn scan_pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

fn plan_over(
    targets: &[Target],
    start: RobotState,
    horizon: f64,
    alpha: f64,
    solver: Solver,
) -> (ContinuousPlan, usize) {
    let cands = candidates(targets, start, horizon, alpha);
    let chain = match solver {
        Solver::Scan => chain_scan(&cands, alpha),
        Solver::Dominance => chain_dominance(&cands, alpha),
    };
    let visited: Vec<Target> = chain.iter().map(|&i| cands[i]).collect();
    let mut plan = ContinuousPlan::empty(start, start.x1 + horizon);
    if let Some(last) = visited.last() {
        plan.end_state.x2 = last.p2;
    }
    plan.total_reward = visited.iter().map(|t| t.reward).sum();
    plan.visited = visited;
    (plan, cands.len())
}

/// Best plan over targets with `p1` in `(start.x1, start.x1 + horizon]`,
/// using the pairwise scan. `targets` must be sorted by `p1`.
pub fn optimal_plan(targets: &[Target], start: RobotState, horizon: f64, alpha: f64) -> Result<ContinuousPlan> {
    optimal_plan_with(targets, start, horizon, alpha, Solver::Scan)
}

pub fn optimal_plan_with(
    targets: &[Target],
    start: RobotState,
    horizon: f64,
    alpha: f64,
    solver: Solver,
) -> Result<ContinuousPlan> {
    check_alpha(alpha)?;
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be non-negative, got {horizon}")));
    }
    Ok(plan_over(targets, start, horizon, alpha, solver).0)
}

/// Like [`optimal_plan`], also reporting the workload of the single call.
pub fn optimal_plan_counted(
    targets: &[Target],
    start: RobotState,
    horizon: f64,
    alpha: f64,
    solver: Solver,
) -> Result<(ContinuousPlan, WorkloadCounters)> {
    check_alpha(alpha)?;
    let (plan, n) = plan_over(targets, start, horizon, alpha, solver);
    let counters = WorkloadCounters {
        dp_relaxations: scan_pairs(n),
        planner_calls: 1,
        targets_visited: plan.visited.len() as u64,
        candidates_seen: n as u64,
        distance: horizon,
    };
    Ok((plan, counters))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecedingOutcome {
    pub plan: ContinuousPlan,
    pub counters: WorkloadCounters,
    /// Reward collected in each strip.
    pub per_iteration: Vec<f64>,
}

fn strip_targets<F: TargetSource + ?Sized>(field: &F, at: RobotState, depth: f64, alpha: f64) -> Vec<Target> {
    let reach = alpha * depth;
    field.window(at.x1, at.x1 + depth, at.x2 - reach, at.x2 + reach)
}

/// Receding-horizon planning: `ceil(length / sensing)` strips, each planned
/// from the state the previous strip left the robot in. The last strip is
/// clipped to the mission end.
pub fn receding_horizon_plan<F: TargetSource + ?Sized>(
    field: &F,
    start: RobotState,
    length: f64,
    sensing: f64,
    alpha: f64,
    solver: Solver,
) -> Result<RecedingOutcome> {
    check_alpha(alpha)?;
    if !(sensing > 0.0 && sensing.is_finite()) {
        return Err(Error::InvalidArgument(format!("sensing range must be positive, got {sensing}")));
    }
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("mission length must be finite, got {length}")));
    }
    let strips = (length / sensing).ceil() as u64;
    let end = start.x1 + length;
    let mut at = start;
    let mut visited = Vec::new();
    let mut per_iteration = Vec::with_capacity(strips as usize);
    let mut counters = WorkloadCounters::default();
    for i in 0..strips {
        let x1 = start.x1 + i as f64 * sensing;
        at.x1 = x1;
        let depth = sensing.min(end - x1);
        let window = strip_targets(field, at, depth, alpha);
        let (plan, n) = plan_over(&window, at, depth, alpha, solver);
        counters.dp_relaxations += scan_pairs(n);
        counters.candidates_seen += n as u64;
        counters.planner_calls += 1;
        counters.targets_visited += plan.visited.len() as u64;
        per_iteration.push(plan.total_reward);
        at.x2 = plan.end_state.x2;
        visited.extend(plan.visited);
    }
    counters.distance = length;
    let total_reward = visited.iter().map(|t: &Target| t.reward).sum();
    let plan = ContinuousPlan { start, visited, total_reward, end_state: RobotState { x1: end, x2: at.x2 } };
    Ok(RecedingOutcome { plan, counters, per_iteration })
}

/// Field on the cone reachable from the origin within `length`.
pub fn cone_field(
    lambda: f64,
    dist: RewardDistribution,
    alpha: f64,
    length: f64,
    rng: &SeededRng,
) -> Result<MarkedPointField> {
    MarkedPointField::generate(lambda, Region::cone(length, alpha), dist, rng)
}

/// Monte-Carlo estimate of `E[T*(L)] / L`. Trial `t` uses `rng.substream(t)`.
pub fn estimate_continuous_r_star(
    lambda: f64,
    dist: &RewardDistribution,
    alpha: f64,
    length: f64,
    trials: usize,
    rng: &SeededRng,
) -> Result<Estimate> {
    let samples = continuous_t_star_samples(lambda, dist, alpha, length, trials, rng)?;
    let per_length: Vec<f64> = samples.iter().map(|t| t / length).collect();
    Ok(Estimate::from_samples(&per_length))
}

/// `T*(L)` for each of `trials` independent cone fields.
pub fn continuous_t_star_samples(
    lambda: f64,
    dist: &RewardDistribution,
    alpha: f64,
    length: f64,
    trials: usize,
    rng: &SeededRng,
) -> Result<Vec<f64>> {
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed for a standard error".into()));
    }
    check_alpha(alpha)?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("travel distance must be positive, got {length}")));
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let field = cone_field(lambda, *dist, alpha, length, &rng.substream(t))?;
            let plan = optimal_plan_with(field.targets(), RobotState::ORIGIN, length, alpha, Solver::Dominance)?;
            Ok(plan.total_reward)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStop {
    /// Distance covered by the strips that met the threshold.
    pub distance: f64,
    pub strips_passed: u64,
    /// True when the run reached the distance cap without tripping the rule.
    pub capped: bool,
}

/// Receding-horizon run on an unbounded lazily generated field until a strip
/// yields `T_i / S` below the rule's threshold or the distance reaches
/// `max_distance`.
pub fn run_continuous_until_suboptimal(
    lambda: f64,
    dist: &RewardDistribution,
    alpha: f64,
    sensing: f64,
    rule: &StoppingRule,
    max_distance: f64,
    rng: &SeededRng,
) -> Result<ContinuousStop> {
    check_alpha(alpha)?;
    if !(sensing > 0.0 && sensing.is_finite()) {
        return Err(Error::InvalidArgument(format!("sensing range must be positive, got {sensing}")));
    }
    let field = TiledPoissonField::new(lambda, *dist, sensing, alpha * sensing, rng)?;
    let threshold = rule.threshold();
    let mut at = RobotState::ORIGIN;
    let mut strips = 0u64;
    loop {
        let distance = strips as f64 * sensing;
        if distance >= max_distance {
            return Ok(ContinuousStop { distance: max_distance, strips_passed: strips, capped: true });
        }
        at.x1 = distance;
        let window = strip_targets(&field, at, sensing, alpha);
        let (plan, _) = plan_over(&window, at, sensing, alpha, Solver::Dominance);
        if plan.total_reward / sensing < threshold {
            return Ok(ContinuousStop { distance, strips_passed: strips, capped: false });
        }
        at.x2 = plan.end_state.x2;
        strips += 1;
        field.evict_before(at.x1);
    }
}

/// One line of a plan dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDump {
    pub seed: u64,
    pub stream: u64,
    pub params: serde_json::Value,
    pub total_reward: f64,
    pub visited: Vec<[f64; 3]>,
    pub counters: WorkloadCounters,
}

impl PlanDump {
    pub fn new(rng: &SeededRng, params: serde_json::Value, plan: &ContinuousPlan, counters: WorkloadCounters) -> Self {
        Self {
            seed: rng.seed(),
            stream: rng.stream_id(),
            params,
            total_reward: plan.total_reward,
            visited: plan.visited.iter().map(|t| [t.p1, t.p2, t.reward]).collect(),
            counters,
        }
    }
}
