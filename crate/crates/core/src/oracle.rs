//! Brute-force reference solutions.
//!
//! Nothing here shares code with the dynamic programs or the conjugate
//! update: lattice paths are enumerated move by move, target chains are
//! enumerated as subsets, and posteriors are integrated on a grid. The
//! `oracle-check` subcommand and the test suites compare the fast paths
//! against these.

use serde::{Deserialize, Serialize};

use crate::bayes::{GaussianBelief, Measurement};
use crate::lattice::{optimal_reward_to_vertex, optimal_total_reward, LatticeField, Vertex};
use crate::planning::{optimal_plan, RobotState};
use crate::poisson::Target;
use crate::rng::SeededRng;

/// Best reward over all `2^(n-1)` monotone paths crossing `n` vertices.
pub fn lattice_best_path(field: &LatticeField, n: usize) -> f64 {
    assert!(n >= 1 && n <= 24, "enumeration is exponential in n");
    let moves = n - 1;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << moves) {
        let (mut a, mut b) = (0usize, 0usize);
        let mut total = field.reward(Vertex(0, 0)).expect("origin");
        for k in 0..moves {
            if mask >> k & 1 == 1 {
                a += 1;
            } else {
                b += 1;
            }
            total += field.reward(Vertex(a, b)).expect("inside wedge");
        }
        best = best.max(total);
    }
    best
}

/// Best reward over all monotone paths from the origin to `v`.
pub fn lattice_best_path_to(field: &LatticeField, v: Vertex) -> f64 {
    let moves = v.0 + v.1;
    assert!(moves <= 24);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << moves) {
        if mask.count_ones() as usize != v.0 {
            continue;
        }
        let (mut a, mut b) = (0usize, 0usize);
        let mut total = field.reward(Vertex(0, 0)).expect("origin");
        for k in 0..moves {
            if mask >> k & 1 == 1 {
                a += 1;
            } else {
                b += 1;
            }
            total += field.reward(Vertex(a, b)).expect("inside wedge");
        }
        best = best.max(total);
    }
    best
}

/// Best reward over every subset of `targets` that a robot starting at
/// `(x1, x2)` with agility `alpha` can visit in order of increasing `p1`
/// within `(x1, x1 + length]`.
pub fn chain_best_subset(targets: &[Target], x1: f64, x2: f64, length: f64, alpha: f64) -> f64 {
    assert!(targets.len() <= 20, "enumeration is exponential in the target count");
    let mut sorted: Vec<Target> = targets.to_vec();
    sorted.sort_by(|a, b| a.p1.total_cmp(&b.p1));
    let mut best = 0.0f64;
    for mask in 1u32..(1u32 << sorted.len()) {
        let (mut px, mut py) = (x1, x2);
        let mut total = 0.0;
        let mut ok = true;
        for (k, t) in sorted.iter().enumerate() {
            if mask >> k & 1 == 0 {
                continue;
            }
            let dx = t.p1 - px;
            let in_window = t.p1 > x1 && t.p1 <= x1 + length;
            // strictly forward, and lateral offset inside the closed cone
            if !in_window || dx <= 0.0 || (t.p2 - py).abs() > alpha * dx {
                ok = false;
                break;
            }
            total += t.reward;
            px = t.p1;
            py = t.p2;
        }
        if ok {
            best = best.max(total);
        }
    }
    best
}

/// Posterior mean and precision of a scalar under a Gaussian prior and
/// Gaussian measurements, by quadrature of `prior * likelihood` on a grid.
pub fn posterior_by_quadrature(prior_mean: f64, prior_precision: f64, data: &[(f64, f64)]) -> (f64, f64) {
    let log_density = |theta: f64| {
        let mut s = -0.5 * prior_precision * (theta - prior_mean).powi(2);
        for &(y, beta) in data {
            s -= 0.5 * beta * (y - theta).powi(2);
        }
        s
    };
    // grid wide enough to hold every factor's bulk
    let widest_sd =
        std::iter::once(prior_precision).chain(data.iter().map(|d| d.1)).map(|p| 1.0 / p.sqrt()).fold(0.0, f64::max);
    let centers = std::iter::once(prior_mean).chain(data.iter().map(|d| d.0));
    let lo = centers.clone().fold(f64::INFINITY, f64::min) - 12.0 * widest_sd;
    let hi = centers.fold(f64::NEG_INFINITY, f64::max) + 12.0 * widest_sd;
    let n = 400_000usize;
    let h = (hi - lo) / n as f64;
    let peak = (0..=n).map(|i| log_density(lo + i as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let theta = lo + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let p = w * (log_density(theta) - peak).exp();
        z += p;
        m1 += p * theta;
        m2 += p * theta * theta;
    }
    let mean = m1 / z;
    let var = m2 / z - mean * mean;
    (mean, 1.0 / var)
}

/// Result of comparing a fast path with its brute-force reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn suite(name: &str, cases: usize, mut case: impl FnMut(usize) -> Option<String>) -> SuiteOutcome {
    let mut failures = 0;
    let mut first_failure = None;
    for i in 0..cases {
        if let Some(msg) = case(i) {
            failures += 1;
            first_failure.get_or_insert(msg);
        }
    }
    SuiteOutcome { name: name.into(), cases, failures, first_failure }
}

/// Lattice DP against path enumeration on random wedges with `n <= 8`.
pub fn lattice_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let root = SeededRng::new(seed, 0);
    suite("lattice DP vs path enumeration", cases, |i| {
        let mut rng = root.substream(i as u64);
        let n = 1 + (rng.uniform() * 8.0) as usize;
        // small integer rewards make ties common
        let field = LatticeField::from_fn(n, |_| (rng.uniform() * 5.0).floor());
        let (dp, _) = optimal_total_reward(&field, n).expect("n within horizon");
        let brute = lattice_best_path(&field, n);
        let v = Vertex(n / 2, (n - 1) - n / 2);
        let dp_v = optimal_reward_to_vertex(&field, v).expect("inside wedge");
        let brute_v = lattice_best_path_to(&field, v);
        (dp != brute || dp_v != brute_v)
            .then(|| format!("case {i}: n={n} dp={dp} enum={brute} to {v:?}: {dp_v} vs {brute_v}"))
    })
}

/// Continuous DP against subset enumeration on random fields of at most 12
/// targets.
pub fn continuous_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let root = SeededRng::new(seed, 1);
    suite("continuous DP vs subset enumeration", cases, |i| {
        let mut rng = root.substream(i as u64);
        let count = (rng.uniform() * 13.0) as usize;
        let alpha = 0.25 + rng.uniform() * 2.0;
        let length = 1.0 + rng.uniform() * 4.0;
        let mut targets: Vec<Target> = (0..count)
            .map(|_| Target {
                p1: rng.uniform() * length * 1.2,
                p2: (rng.uniform() - 0.5) * 2.0 * alpha * length,
                reward: (rng.uniform() * 4.0).floor() + rng.uniform(),
            })
            .collect();
        targets.sort_by(|a, b| a.p1.total_cmp(&b.p1));
        targets.dedup_by(|a, b| a.p1 == b.p1);
        let plan = optimal_plan(&targets, RobotState::ORIGIN, length, alpha).expect("valid agility");
        let brute = chain_best_subset(&targets, 0.0, 0.0, length, alpha);
        let ok = plan.total_reward == brute && plan.is_feasible(alpha);
        (!ok).then(|| {
            format!("case {i}: {} targets, alpha={alpha}: dp={} enum={brute}", targets.len(), plan.total_reward)
        })
    })
}

/// Conjugate update against grid integration, relative tolerance `1e-6`.
pub fn bayes_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let root = SeededRng::new(seed, 2);
    suite("conjugate update vs quadrature", cases, |i| {
        let mut rng = root.substream(i as u64);
        let prior_mean = (rng.uniform() - 0.5) * 10.0;
        let prior_precision = 0.2 + rng.uniform() * 3.0;
        let k = 1 + (rng.uniform() * 5.0) as usize;
        let data: Vec<(f64, f64)> = (0..k).map(|_| ((rng.uniform() - 0.5) * 10.0, 0.2 + rng.uniform() * 3.0)).collect();
        let mut belief = GaussianBelief::new(prior_mean, prior_precision).expect("positive precision");
        for &(y, beta) in &data {
            belief = belief.update(&Measurement::new(y, beta).expect("positive precision"));
        }
        let (mean, precision) = posterior_by_quadrature(prior_mean, prior_precision, &data);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        let ok = rel(belief.mean, mean) <= 1e-6 && rel(belief.precision, precision) <= 1e-6;
        (!ok).then(|| format!("case {i}: update ({}, {}) vs grid ({mean}, {precision})", belief.mean, belief.precision))
    })
}
