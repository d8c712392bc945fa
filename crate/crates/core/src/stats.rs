//! Small statistics helpers shared by the estimators, the harness and tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean and standard error of `xs`, summed in slice order so the result
    /// does not depend on how the values were produced.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_err: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, std_err: f64::NAN };
        }
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        Self { mean, std_err: (ss / (n - 1) as f64 / n as f64).sqrt() }
    }
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical coefficient `c(a) = sqrt(-ln(a/2)/2)`.
pub fn kolmogorov_coefficient(significance: f64) -> f64 {
    (-(significance / 2.0).ln() / 2.0).sqrt()
}

/// One-sample KS critical value with Stephens' finite-n correction.
pub fn ks_critical_one_sample(n: usize, significance: f64) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_coefficient(significance) / (sn + 0.12 + 0.11 / sn)
}

pub fn ks_critical_two_sample(n: usize, m: usize, significance: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_coefficient(significance) * ((n + m) / (n * m)).sqrt()
}

pub fn chi_square_quantile(df: f64, p: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").inverse_cdf(p)
}

pub fn student_t_quantile(df: f64, p: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(p)
}
