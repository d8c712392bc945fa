use maxreward::bayes::{GaussianBelief, Measurement};
use maxreward::lattice::{optimal_reward_to_vertex, optimal_total_reward, LatticeField, Vertex};
use maxreward::oracle::{chain_best_subset, lattice_best_path, lattice_best_path_to, posterior_by_quadrature};
use maxreward::planning::{optimal_plan, optimal_plan_with, RobotState, Solver};
use maxreward::poisson::Target;
use proptest::prelude::*;

fn wedge() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|n| {
        let cells = n * (n + 1) / 2;
        let reward = prop_oneof![(0u8..4).prop_map(f64::from), 0.0f64..10.0];
        (Just(n), prop::collection::vec(reward, cells))
    })
}

fn field(n: usize, rewards: &[f64]) -> LatticeField {
    // level-major layout: level l holds l + 1 cells
    LatticeField::from_fn(n, |v| rewards[v.level() * (v.level() + 1) / 2 + v.0])
}

fn targets() -> impl Strategy<Value = (f64, f64, Vec<Target>)> {
    (0.25f64..3.0, 1.0f64..6.0).prop_flat_map(|(alpha, length)| {
        let target = (
            0.0..length * 1.2,
            -alpha * length..alpha * length,
            prop_oneof![(0u8..3).prop_map(f64::from), 0.0f64..5.0],
        )
            .prop_map(|(p1, p2, reward)| Target { p1, p2, reward });
        (Just(alpha), Just(length), prop::collection::vec(target, 0..=12))
    })
}

fn distinct(mut ts: Vec<Target>) -> Vec<Target> {
    ts.sort_by(|a, b| a.p1.total_cmp(&b.p1));
    ts.dedup_by(|a, b| a.p1 == b.p1);
    ts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lattice_dp_equals_path_enumeration((n, rewards) in wedge()) {
        let f = field(n, &rewards);
        let (dp, path) = optimal_total_reward(&f, n).unwrap();
        prop_assert_eq!(dp, lattice_best_path(&f, n));
        prop_assert_eq!(path.len(), n);
        let along: f64 = path.iter().map(|&v| f.reward(v).unwrap()).sum();
        prop_assert_eq!(along, dp);
        for a in 0..n {
            let v = Vertex(a, n - 1 - a);
            prop_assert_eq!(optimal_reward_to_vertex(&f, v).unwrap(), lattice_best_path_to(&f, v));
        }
    }

    #[test]
    fn continuous_dp_equals_subset_enumeration((alpha, length, ts) in targets()) {
        let ts = distinct(ts);
        let plan = optimal_plan(&ts, RobotState::ORIGIN, length, alpha).unwrap();
        prop_assert!(plan.is_feasible(alpha));
        prop_assert_eq!(plan.total_reward, chain_best_subset(&ts, 0.0, 0.0, length, alpha));
        let fast = optimal_plan_with(&ts, RobotState::ORIGIN, length, alpha, Solver::Dominance).unwrap();
        prop_assert!(fast.is_feasible(alpha));
        prop_assert_eq!(fast.total_reward, plan.total_reward);
    }

    #[test]
    fn continuous_dp_from_offset_start((alpha, length, ts) in targets(), x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let ts = distinct(ts);
        let plan = optimal_plan(&ts, RobotState { x1, x2 }, length, alpha).unwrap();
        prop_assert!(plan.is_feasible(alpha));
        prop_assert_eq!(plan.total_reward, chain_best_subset(&ts, x1, x2, length, alpha));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conjugate_update_matches_quadrature(
        prior_mean in -5.0f64..5.0,
        prior_precision in 0.2f64..3.0,
        data in prop::collection::vec((-5.0f64..5.0, 0.2f64..3.0), 1..6),
    ) {
        let mut belief = GaussianBelief::new(prior_mean, prior_precision).unwrap();
        for &(y, beta) in &data {
            belief = belief.update(&Measurement::new(y, beta).unwrap());
        }
        let (mean, precision) = posterior_by_quadrature(prior_mean, prior_precision, &data);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        prop_assert!(rel(belief.mean, mean) <= 1e-6, "mean {} vs {}", belief.mean, mean);
        prop_assert!(rel(belief.precision, precision) <= 1e-6, "precision {} vs {}", belief.precision, precision);
    }
}
