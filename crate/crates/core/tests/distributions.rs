use maxreward::stats::{ks_critical_one_sample, ks_statistic};
use maxreward::{RewardDistribution, SeededRng, TailClass};
use proptest::prelude::*;

fn draws(dist: &RewardDistribution, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed, 0);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

#[test]
fn light_tailed_moments_within_four_standard_errors() {
    let n = 1_000_000;
    for spec in ["bernoulli:p=0.5", "geometric:p=0.5", "geometric:p=0.2", "exponential:rate=1", "exponential:rate=3"] {
        let d: RewardDistribution = spec.parse().unwrap();
        assert_eq!(d.tail_class(), TailClass::LightTailed);
        let m = d.moments();
        let xs = draws(&d, n, 11);
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let central = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / nf;
        let (var, m4) = (central(2), central(4));
        let se_mean = (var / nf).sqrt();
        let se_var = ((m4 - var * var) / nf).sqrt();
        assert!((mean - m.mean).abs() <= 4.0 * se_mean, "{spec}: mean {mean} vs {}", m.mean);
        let target_var = m.std_dev * m.std_dev;
        assert!((var - target_var).abs() <= 4.0 * se_var, "{spec}: variance {var} vs {target_var}");
    }
}

#[test]
fn pareto_samples_pass_ks_against_cdf() {
    for spec in ["pareto:xm=1,alpha=1.5", "pareto:xm=2,alpha=0.8", "pareto:xm=1,alpha=3"] {
        let d: RewardDistribution = spec.parse().unwrap();
        assert_eq!(d.tail_class(), TailClass::HeavyTailed);
        let n = 100_000;
        let xs = draws(&d, n, 5);
        let stat = ks_statistic(&xs, |x| d.cdf(x));
        let crit = ks_critical_one_sample(n, 0.01);
        assert!(stat < crit, "{spec}: KS {stat} >= {crit}");
    }
}

#[test]
fn geometric_pmf_matches_counts() {
    let d = RewardDistribution::geometric(0.3).unwrap();
    let n = 200_000;
    let xs = draws(&d, n, 2);
    for k in 1..=6 {
        let observed = xs.iter().filter(|&&x| x == k as f64).count() as f64 / n as f64;
        let expected = 0.3 * 0.7f64.powi(k - 1);
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((observed - expected).abs() <= 4.0 * se, "P(X={k}) {observed} vs {expected}");
    }
}

#[test]
fn pareto_variance_diverges_below_two() {
    let d = RewardDistribution::pareto(1.0, 1.5).unwrap();
    let m = d.moments();
    assert_eq!(m.mean, 3.0);
    assert!(m.std_dev.is_infinite());
    let xs = draws(&d, 1_000_000, 9);
    let var = |k: usize| {
        let s = &xs[..k];
        let mean = s.iter().sum::<f64>() / k as f64;
        s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k as f64
    };
    assert!(var(1_000_000) > var(1_000));
}

proptest! {
    #[test]
    fn equal_keys_reproduce_bitwise(seed in any::<u64>(), stream in any::<u64>(), rate in 0.1f64..10.0) {
        let d = RewardDistribution::exponential(rate).unwrap();
        let mut a = SeededRng::new(seed, stream);
        let mut b = SeededRng::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(d.sample(&mut a).to_bits(), d.sample(&mut b).to_bits());
        }
    }

    #[test]
    fn uniforms_are_half_open(seed in any::<u64>(), stream in any::<u64>()) {
        let mut rng = SeededRng::new(seed, stream);
        for _ in 0..256 {
            let u = rng.uniform();
            prop_assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn pareto_quantile_is_finite_and_above_scale(scale in 0.1f64..10.0, shape in 0.2f64..5.0, u in 0.0f64..1.0) {
        let d = RewardDistribution::pareto(scale, shape).unwrap();
        let x = d.quantile(u);
        prop_assert!(x.is_finite() && x >= scale);
        prop_assert!((d.cdf(x) - u).abs() < 1e-9);
    }

    #[test]
    fn spec_strings_round_trip(p in 0.01f64..1.0, rate in 0.01f64..100.0) {
        for d in [
            RewardDistribution::bernoulli(p).unwrap(),
            RewardDistribution::geometric(p).unwrap(),
            RewardDistribution::exponential(rate).unwrap(),
            RewardDistribution::pareto(rate, p + 0.5).unwrap(),
            RewardDistribution::constant(rate).unwrap(),
        ] {
            prop_assert_eq!(d.to_string().parse::<RewardDistribution>().unwrap(), d);
        }
    }
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let a = SeededRng::new(1, 0);
    let n = 100_000;
    let mut x = a.substream(0);
    let mut y = a.substream(1);
    let xs: Vec<f64> = (0..n).map(|_| x.uniform()).collect();
    let ys: Vec<f64> = (0..n).map(|_| y.uniform()).collect();
    let r = maxreward::stats::pearson(&xs, &ys);
    assert!(r.abs() < 4.0 / (n as f64).sqrt(), "correlation {r}");
}
