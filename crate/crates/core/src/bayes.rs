//! Gaussian estimation of a scalar from measurements taken at visited targets.
//!
//! A target's reward is read as the precision of the measurement taken
//! there, so the posterior precision after a mission is the prior precision
//! plus the collected reward.

use std::io::Write;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::RewardDistribution;
use crate::error::{Error, Result};
use crate::planning::{cone_field, optimal_plan_with, ContinuousPlan, RobotState, Solver};
use crate::rng::SeededRng;
use crate::stats::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: f64,
    pub precision: f64,
}

impl GaussianBelief {
    pub fn new(mean: f64, precision: f64) -> Result<Self> {
        if !(precision > 0.0 && precision.is_finite()) || !mean.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid belief N({mean}, 1/{precision})")));
        }
        Ok(Self { mean, precision })
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.precision
    }

    /// Conjugate update with one measurement.
    pub fn update(&self, m: &Measurement) -> GaussianBelief {
        let precision = self.precision + m.precision;
        let mean = (self.precision * self.mean + m.precision * m.value) / precision;
        GaussianBelief { mean, precision }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub precision: f64,
}

impl Measurement {
    pub fn new(value: f64, precision: f64) -> Result<Self> {
        if !(precision > 0.0 && precision.is_finite()) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid measurement {value} with precision {precision}")));
        }
        Ok(Self { value, precision })
    }
}

pub fn update(belief: &GaussianBelief, m: &Measurement) -> GaussianBelief {
    belief.update(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionEstimate {
    /// Belief after each informative visit, prior first.
    pub trajectory: Vec<GaussianBelief>,
    pub final_variance: f64,
}

/// Draws `y_i ~ N(theta, 1 / r_i)` at each visited target in order and folds
/// them into `prior`. Zero-reward targets carry no information and are
/// skipped.
pub fn simulate_mission_estimation(
    plan: &ContinuousPlan,
    theta_true: f64,
    prior: GaussianBelief,
    rng: &mut SeededRng,
) -> MissionEstimate {
    let mut trajectory = Vec::with_capacity(plan.visited.len() + 1);
    trajectory.push(prior);
    let mut belief = prior;
    for t in plan.visited.iter().filter(|t| t.reward > 0.0) {
        let noise = Normal::new(theta_true, 1.0 / t.reward.sqrt()).expect("positive precision");
        let m = Measurement { value: noise.sample(rng), precision: t.reward };
        belief = belief.update(&m);
        trajectory.push(belief);
    }
    // posterior variance 1 / (prior precision + total reward)
    let final_variance = 1.0 / (prior.precision + plan.total_reward);
    MissionEstimate { trajectory, final_variance }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every sensor has the mean precision.
    Homogeneous,
    /// Sensor precisions are exponential with the mean precision.
    Randomized,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Homogeneous => "homogeneous",
            Strategy::Randomized => "randomized",
        }
    }

    pub fn distribution(&self, mean_precision: f64) -> Result<RewardDistribution> {
        match self {
            Strategy::Homogeneous => RewardDistribution::constant(mean_precision),
            Strategy::Randomized => RewardDistribution::exponential(1.0 / mean_precision),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UgsParams {
    pub lambda: f64,
    pub mean_precision: f64,
    pub length: f64,
    pub alpha: f64,
    pub prior_precision: f64,
    pub trials: usize,
}

/// One strategy at one checkpoint distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UgsRow {
    pub strategy: Strategy,
    pub distance: f64,
    /// Precision collected up to `distance`, per unit distance.
    pub gain: Estimate,
    /// Posterior variance at `distance`, averaged over trials.
    pub posterior_variance: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UgsComparison {
    pub params: UgsParams,
    /// Both strategies at checkpoints `L/10, 2L/10, ..., L`, homogeneous first.
    pub rows: Vec<UgsRow>,
    /// Paired per-trial difference randomized minus homogeneous of gain over `L`.
    pub gap: Estimate,
}

impl UgsComparison {
    pub fn final_row(&self, strategy: Strategy) -> &UgsRow {
        self.rows.iter().rev().find(|r| r.strategy == strategy).expect("both strategies present")
    }

    pub fn checkpoints(&self, strategy: Strategy) -> impl Iterator<Item = &UgsRow> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }

    /// Writes `strategy,L,lambda,alpha,mean_gain,stderr_gain,mean_posterior_variance`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "strategy,L,lambda,alpha,mean_gain,stderr_gain,mean_posterior_variance")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.strategy.name(),
                r.distance,
                self.params.lambda,
                self.params.alpha,
                r.gain.mean,
                r.gain.std_err,
                r.posterior_variance.mean
            )?;
        }
        Ok(())
    }
}

pub const CHECKPOINTS: usize = 10;

/// Collected precision at each checkpoint for one plan.
fn prefix_rewards(plan: &ContinuousPlan, length: f64) -> Vec<f64> {
    (1..=CHECKPOINTS)
        .map(|k| {
            let d = length * k as f64 / CHECKPOINTS as f64;
            plan.visited.iter().filter(|t| t.p1 <= d).map(|t| t.reward).sum()
        })
        .collect()
}

/// Paired comparison of homogeneous and randomized sensor precision at equal
/// mean. Trial `t` builds both fields from `rng.substream(t)`: they share
/// target positions and differ only in marks.
pub fn compare_ugs_strategies(params: UgsParams, rng: &SeededRng) -> Result<UgsComparison> {
    let UgsParams { lambda, mean_precision, length, alpha, prior_precision, trials } = params;
    if !(mean_precision > 0.0) {
        return Err(Error::InvalidArgument(format!("mean precision must be positive, got {mean_precision}")));
    }
    if !(prior_precision > 0.0) {
        return Err(Error::InvalidArgument(format!("prior precision must be positive, got {prior_precision}")));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("at least two trials are needed for a standard error".into()));
    }
    let strategies = [Strategy::Homogeneous, Strategy::Randomized];
    let dists = [strategies[0].distribution(mean_precision)?, strategies[1].distribution(mean_precision)?];
    let per_trial: Vec<[Vec<f64>; 2]> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_rng = rng.substream(t);
            let run = |dist: RewardDistribution| -> Result<Vec<f64>> {
                if lambda <= 0.0 {
                    return Ok(vec![0.0; CHECKPOINTS]);
                }
                let field = cone_field(lambda, dist, alpha, length, &trial_rng)?;
                let plan = optimal_plan_with(field.targets(), RobotState::ORIGIN, length, alpha, Solver::Dominance)?;
                Ok(prefix_rewards(&plan, length))
            };
            Ok([run(dists[0])?, run(dists[1])?])
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(2 * CHECKPOINTS);
    for (s, strategy) in strategies.iter().enumerate() {
        for k in 0..CHECKPOINTS {
            let d = length * (k + 1) as f64 / CHECKPOINTS as f64;
            let gains: Vec<f64> = per_trial.iter().map(|p| p[s][k] / d).collect();
            let vars: Vec<f64> = per_trial.iter().map(|p| 1.0 / (prior_precision + p[s][k])).collect();
            rows.push(UgsRow {
                strategy: *strategy,
                distance: d,
                gain: Estimate::from_samples(&gains),
                posterior_variance: Estimate::from_samples(&vars),
            });
        }
    }
    let diffs: Vec<f64> = per_trial.iter().map(|p| (p[1][CHECKPOINTS - 1] - p[0][CHECKPOINTS - 1]) / length).collect();
    Ok(UgsComparison { params, rows, gap: Estimate::from_samples(&diffs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::Target;

    #[test]
    fn symmetric_update() {
        let b = GaussianBelief::new(0.0, 1.0).unwrap().update(&Measurement::new(0.0, 1.0).unwrap());
        assert_eq!(b, GaussianBelief { mean: 0.0, precision: 2.0 });
    }

    #[test]
    fn two_measurements() {
        let b = GaussianBelief::new(0.0, 1.0)
            .unwrap()
            .update(&Measurement::new(1.0, 2.0).unwrap())
            .update(&Measurement::new(4.0, 3.0).unwrap());
        assert_eq!(b.precision, 6.0);
        assert!((b.mean - 14.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_precisions_rejected() {
        assert!(GaussianBelief::new(0.0, 0.0).is_err());
        assert!(Measurement::new(0.0, -1.0).is_err());
    }

    #[test]
    fn empty_plan_leaves_belief() {
        let prior = GaussianBelief::new(3.0, 2.0).unwrap();
        let plan = ContinuousPlan {
            start: RobotState::ORIGIN,
            visited: vec![],
            total_reward: 0.0,
            end_state: RobotState::ORIGIN,
        };
        let est = simulate_mission_estimation(&plan, 0.0, prior, &mut SeededRng::new(0, 0));
        assert_eq!(est.trajectory, vec![prior]);
        assert_eq!(est.final_variance, 0.5);
    }

    #[test]
    fn final_variance_identity() {
        let visited: Vec<Target> = (1..=4).map(|i| Target { p1: i as f64, p2: 0.0, reward: 2.5 }).collect();
        let plan = ContinuousPlan {
            start: RobotState::ORIGIN,
            visited,
            total_reward: 10.0,
            end_state: RobotState { x1: 5.0, x2: 0.0 },
        };
        let prior = GaussianBelief::new(0.0, 1.0).unwrap();
        let est = simulate_mission_estimation(&plan, 1.0, prior, &mut SeededRng::new(0, 0));
        assert_eq!(est.final_variance, 1.0 / 11.0);
        assert_eq!(est.trajectory.len(), 5);
        assert_eq!(est.trajectory.last().unwrap().precision, 11.0);
    }

    #[test]
    fn zero_intensity_zero_gain() {
        let params =
            UgsParams { lambda: 0.0, mean_precision: 1.0, length: 10.0, alpha: 1.0, prior_precision: 1.0, trials: 4 };
        let c = compare_ugs_strategies(params, &SeededRng::new(0, 0)).unwrap();
        assert_eq!(c.rows.len(), 2 * CHECKPOINTS);
        for r in &c.rows {
            assert_eq!(r.gain.mean, 0.0);
            assert_eq!(r.posterior_variance.mean, 1.0);
        }
    }

    #[test]
    fn csv_has_expected_header() {
        let params =
            UgsParams { lambda: 1.0, mean_precision: 1.0, length: 10.0, alpha: 1.0, prior_precision: 1.0, trials: 3 };
        let c = compare_ugs_strategies(params, &SeededRng::new(1, 0)).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "strategy,L,lambda,alpha,mean_gain,stderr_gain,mean_posterior_variance"
        );
        assert_eq!(text.lines().count(), 1 + 2 * CHECKPOINTS);
        assert_eq!(c.final_row(Strategy::Homogeneous).distance, 10.0);
    }
}
