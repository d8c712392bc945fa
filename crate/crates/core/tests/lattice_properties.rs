use maxreward::lattice::{
    estimate_r_star, iterative_plan, optimal_reward_to_vertex, optimal_total_reward, optimal_total_reward_counted,
    run_until_suboptimal, LatticeField, StoppingRule, Vertex,
};
use maxreward::{RewardDistribution, SeededRng};
use proptest::prelude::*;

fn dist() -> impl Strategy<Value = RewardDistribution> {
    prop_oneof![
        (0.1f64..1.0).prop_map(|p| RewardDistribution::bernoulli(p).unwrap()),
        (0.1f64..1.0).prop_map(|p| RewardDistribution::geometric(p).unwrap()),
        (0.2f64..5.0).prop_map(|r| RewardDistribution::exponential(r).unwrap()),
        (1.1f64..3.0).prop_map(|a| RewardDistribution::pareto(1.0, a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn t_star_is_monotone_in_n(d in dist(), seed in any::<u64>()) {
        let f = LatticeField::seeded(d, 40, &SeededRng::new(seed, 0));
        let mut prev = 0.0;
        for n in 1..=40 {
            let t = optimal_total_reward(&f, n).unwrap().0;
            prop_assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn vertex_reward_dominated_by_level_optimum(d in dist(), seed in any::<u64>(), a in 0usize..20, b in 0usize..20) {
        let f = LatticeField::seeded(d, 40, &SeededRng::new(seed, 1));
        let v = Vertex(a, b);
        let to_v = optimal_reward_to_vertex(&f, v).unwrap();
        let best = optimal_total_reward(&f, v.level() + 1).unwrap().0;
        prop_assert!(to_v <= best);
    }

    #[test]
    fn limited_sensing_never_beats_full_sensing(d in dist(), seed in any::<u64>(), m in 1usize..=12, legs in 1usize..=6) {
        let n = m * legs;
        let mut f = LatticeField::seeded(d, n, &SeededRng::new(seed, 2));
        let best = optimal_total_reward(&f, n).unwrap().0;
        let plan = iterative_plan(&mut f, m, n).unwrap();
        prop_assert_eq!(plan.legs, legs);
        prop_assert!(plan.total_reward <= best + 1e-9 * best.max(1.0));
    }

    #[test]
    fn relaxations_count_wedge_edges(d in dist(), seed in any::<u64>(), n in 1usize..=60) {
        let f = LatticeField::seeded(d, n, &SeededRng::new(seed, 3));
        let (_, path, relax) = optimal_total_reward_counted(&f, n).unwrap();
        prop_assert_eq!(relax, (n * (n - 1)) as u64);
        prop_assert_eq!(path.len(), n);
    }

    #[test]
    fn stopping_distance_counts_passed_legs(seed in any::<u64>(), m in 1usize..=8) {
        let d = RewardDistribution::exponential(1.0).unwrap();
        let rule = StoppingRule::new(0.1, 2.0, 10_000).unwrap();
        let rng = SeededRng::new(seed, 4);
        let a = run_until_suboptimal(&d, m, &rule, &rng).unwrap();
        let b = run_until_suboptimal(&d, m, &rule, &rng).unwrap();
        prop_assert_eq!(a, b);
        if !a.capped {
            prop_assert_eq!(a.distance, a.legs_passed * m as u64);
        }
    }
}

#[test]
fn superadditive_in_expectation() {
    let d = RewardDistribution::exponential(1.0).unwrap();
    let grid = [5usize, 10, 20, 40];
    let trials = 400;
    let t_star = |n: usize| {
        let e = estimate_r_star(&d, n, trials, &SeededRng::new(21, n as u64)).unwrap();
        (e.mean * n as f64, e.std_err * n as f64)
    };
    for &n in &grid {
        for &m in &grid {
            let (a, sa) = t_star(n);
            let (b, sb) = t_star(m);
            let (c, sc) = t_star(n + m);
            let slack = 4.0 * (sa * sa + sb * sb + sc * sc).sqrt();
            assert!(c >= a + b - slack, "E[T*({})] = {c} < {a} + {b} - {slack}", n + m);
        }
    }
}

#[test]
fn constant_field_is_exact() {
    let d = RewardDistribution::constant(1.0).unwrap();
    let e = estimate_r_star(&d, 250, 8, &SeededRng::new(0, 0)).unwrap();
    assert_eq!((e.mean, e.std_err), (1.0, 0.0));
}
