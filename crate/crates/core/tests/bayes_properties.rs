use maxreward::bayes::{
    compare_ugs_strategies, simulate_mission_estimation, GaussianBelief, Measurement, Strategy, UgsParams,
};
use maxreward::planning::{ContinuousPlan, RobotState};
use maxreward::poisson::Target;
use maxreward::SeededRng;
use proptest::prelude::*;

fn fold(prior: GaussianBelief, data: &[(f64, f64)]) -> GaussianBelief {
    data.iter().fold(prior, |b, &(y, beta)| b.update(&Measurement::new(y, beta).unwrap()))
}

fn plan_with_rewards(rewards: &[f64]) -> ContinuousPlan {
    let visited: Vec<Target> =
        rewards.iter().enumerate().map(|(i, &reward)| Target { p1: (i + 1) as f64, p2: 0.0, reward }).collect();
    ContinuousPlan {
        start: RobotState::ORIGIN,
        total_reward: visited.iter().map(|t| t.reward).sum(),
        end_state: RobotState { x1: rewards.len() as f64 + 1.0, x2: 0.0 },
        visited,
    }
}

proptest! {
    #[test]
    fn precision_is_prior_plus_collected_reward(
        prior_precision in 0.1f64..5.0, rewards in prop::collection::vec(0.0f64..4.0, 0..40), seed in any::<u64>()
    ) {
        let plan = plan_with_rewards(&rewards);
        let prior = GaussianBelief::new(0.0, prior_precision).unwrap();
        let est = simulate_mission_estimation(&plan, 1.0, prior, &mut SeededRng::new(seed, 0));
        prop_assert_eq!(est.final_variance, 1.0 / (prior_precision + plan.total_reward));
        let last = est.trajectory.last().unwrap();
        prop_assert!((last.precision - (prior_precision + plan.total_reward)).abs() <= 1e-12 * last.precision);
        prop_assert_eq!(est.trajectory.len(), 1 + rewards.iter().filter(|&&r| r > 0.0).count());
    }

    #[test]
    fn posterior_ignores_measurement_order(
        prior_mean in -5.0f64..5.0,
        prior_precision in 0.1f64..5.0,
        data in prop::collection::vec((-10.0f64..10.0, 0.1f64..5.0), 1..20),
        shuffle_seed in any::<u64>(),
    ) {
        let prior = GaussianBelief::new(prior_mean, prior_precision).unwrap();
        let a = fold(prior, &data);
        let mut permuted = data.clone();
        let mut rng = SeededRng::new(shuffle_seed, 0);
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, (rng.uniform() * (i + 1) as f64) as usize);
        }
        let b = fold(prior, &permuted);
        prop_assert!((a.mean - b.mean).abs() <= 1e-12 * a.mean.abs().max(1.0));
        prop_assert!((a.precision - b.precision).abs() <= 1e-12 * a.precision);
    }
}

#[test]
fn posterior_mean_is_consistent() {
    let plan = plan_with_rewards(&[1.0; 1000]);
    let prior = GaussianBelief::new(0.0, 1.0).unwrap();
    let root = SeededRng::new(4, 0);
    let bound = 4.0 / 1001f64.sqrt();
    let trials = 500;
    let close = (0..trials)
        .filter(|&t| {
            let est = simulate_mission_estimation(&plan, 5.0, prior, &mut root.substream(t));
            (est.trajectory.last().unwrap().mean - 5.0).abs() <= bound
        })
        .count();
    assert!(close as f64 >= 0.95 * trials as f64, "{close}/{trials}");
}

#[test]
fn empty_plan_keeps_prior() {
    let prior = GaussianBelief::new(2.0, 3.0).unwrap();
    let est = simulate_mission_estimation(&plan_with_rewards(&[]), 0.0, prior, &mut SeededRng::new(0, 0));
    assert_eq!(est.trajectory, vec![prior]);
    assert_eq!(est.final_variance, 1.0 / 3.0);
}

#[test]
fn homogeneous_gain_matches_unit_reward_rate() {
    let params =
        UgsParams { lambda: 2.0, mean_precision: 1.0, length: 100.0, alpha: 1.0, prior_precision: 1.0, trials: 100 };
    let cmp = compare_ugs_strategies(params, &SeededRng::new(5, 0)).unwrap();
    let g = cmp.final_row(Strategy::Homogeneous).gain.mean;
    assert!((g / 2.0 - 1.0).abs() <= 0.10, "homogeneous gain {g}");
    assert_eq!(cmp.checkpoints(Strategy::Randomized).count(), 10);
}

#[test]
fn zero_intensity_gives_zero_gain() {
    let params =
        UgsParams { lambda: 0.0, mean_precision: 1.0, length: 10.0, alpha: 1.0, prior_precision: 1.0, trials: 4 };
    let cmp = compare_ugs_strategies(params, &SeededRng::new(0, 0)).unwrap();
    assert!(cmp.rows.iter().all(|r| r.gain.mean == 0.0));
}
