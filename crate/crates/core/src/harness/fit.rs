//! Least-squares fits of sweep results and the workload summary.

use serde::{Deserialize, Serialize};

use super::records::{check_single_config, ExperimentRecord};
use crate::error::{Error, Result};
use crate::stats::student_t_quantile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `y = c x^b`, fitted in log-log coordinates.
    PowerLaw,
    /// `y = c e^(b x)`, fitted in semi-log coordinates.
    ExpGrowth,
    /// `y = a + b x`.
    Linear,
    /// `y = c`.
    Constant,
}

impl std::str::FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power-law" => Ok(FitModel::PowerLaw),
            "exp-growth" => Ok(FitModel::ExpGrowth),
            "linear" => Ok(FitModel::Linear),
            "constant" => Ok(FitModel::Constant),
            _ => Err(Error::InvalidArgument(format!("unknown fit model `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Exponent (power law), rate (exponential), slope (linear) or level
    /// (constant).
    pub exponent_or_rate: f64,
    /// Intercept in the fitting coordinates.
    pub intercept: f64,
    /// Share of variance explained in the fitting coordinates; zero for the
    /// constant model.
    pub r_squared: f64,
    pub ci95: (f64, f64),
    pub points: usize,
}

impl FitResult {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.exponent_or_rate >= lo && self.exponent_or_rate <= hi
    }
}

/// Fits `ys` against `xs`. Needs at least three points, positive values on
/// log axes, and a non-constant abscissa for every model but `Constant`.
pub fn fit_points(xs: &[f64], ys: &[f64], model: FitModel) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("abscissa and ordinate lengths differ".into()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::DegenerateFit(format!("{n} points; at least 3 are needed")));
    }
    let log_x = model == FitModel::PowerLaw;
    let log_y = matches!(model, FitModel::PowerLaw | FitModel::ExpGrowth);
    if (log_x && xs.iter().any(|&x| !(x > 0.0))) || (log_y && ys.iter().any(|&y| !(y > 0.0))) {
        return Err(Error::DegenerateFit("log-scale fit needs positive values".into()));
    }
    let u: Vec<f64> = xs.iter().map(|&x| if log_x { x.ln() } else { x }).collect();
    let v: Vec<f64> = ys.iter().map(|&y| if log_y { y.ln() } else { y }).collect();
    let nf = n as f64;
    let mv = v.iter().sum::<f64>() / nf;

    if model == FitModel::Constant {
        let ss: f64 = v.iter().map(|y| (y - mv).powi(2)).sum();
        let se = (ss / (nf - 1.0) / nf).sqrt();
        let t = student_t_quantile(nf - 1.0, 0.975);
        return Ok(FitResult {
            model,
            exponent_or_rate: mv,
            intercept: mv,
            r_squared: 0.0,
            ci95: (mv - t * se, mv + t * se),
            points: n,
        });
    }

    let mu = u.iter().sum::<f64>() / nf;
    let sxx: f64 = u.iter().map(|x| (x - mu).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("constant abscissa".into()));
    }
    let sxy: f64 = u.iter().zip(&v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let syy: f64 = v.iter().map(|y| (y - mv).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mv - slope * mu;
    let sse: f64 = u.iter().zip(&v).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    let t = student_t_quantile(nf - 2.0, 0.975);
    Ok(FitResult {
        model,
        exponent_or_rate: slope,
        intercept,
        r_squared,
        ci95: (slope - t * se, slope + t * se),
        points: n,
    })
}

/// Fits the records' means against their sweep values. Censored records are
/// left out; records must come from one configuration and one metric.
pub fn fit(records: &[ExperimentRecord], model: FitModel) -> Result<FitResult> {
    check_single_config(records)?;
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.metric != first.metric || r.sweep_name != first.sweep_name) {
            return Err(Error::InvalidArgument(format!(
                "cannot fit {}/{} together with {}/{}",
                first.metric, first.sweep_name, other.metric, other.sweep_name
            )));
        }
    }
    let kept: Vec<&ExperimentRecord> = records.iter().filter(|r| !r.censored).collect();
    let xs: Vec<f64> = kept.iter().map(|r| r.sweep_value).collect();
    let ys: Vec<f64> = kept.iter().map(|r| r.mean).collect();
    fit_points(&xs, &ys, model)
}

/// Records of one metric, in sweep order.
pub fn select(records: &[ExperimentRecord], metric: &str) -> Vec<ExperimentRecord> {
    records.iter().filter(|r| r.metric == metric).cloned().collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkloadReport {
    pub sweep_name: String,
    pub relaxations_per_call: Option<FitResult>,
    pub relaxations_per_distance: Option<FitResult>,
    pub visits_per_distance: Option<FitResult>,
}

pub const RELAXATIONS_PER_CALL: &str = "relaxations_per_call";
pub const RELAXATIONS_PER_DISTANCE: &str = "relaxations_per_distance";
pub const VISITS_PER_DISTANCE: &str = "visits_per_distance";
pub const CANDIDATES_PER_CALL: &str = "candidates_per_call";

/// Power-law fits of the workload metrics against the swept variable.
pub fn workload_report(records: &[ExperimentRecord]) -> Result<WorkloadReport> {
    check_single_config(records)?;
    let sweep_name = records.first().map(|r| r.sweep_name.clone()).unwrap_or_default();
    let fit_metric = |metric: &str| -> Result<Option<FitResult>> {
        let rs = select(records, metric);
        if rs.is_empty() {
            Ok(None)
        } else {
            fit(&rs, FitModel::PowerLaw).map(Some)
        }
    };
    Ok(WorkloadReport {
        sweep_name,
        relaxations_per_call: fit_metric(RELAXATIONS_PER_CALL)?,
        relaxations_per_distance: fit_metric(RELAXATIONS_PER_DISTANCE)?,
        visits_per_distance: fit_metric(VISITS_PER_DISTANCE)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 9.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.sqrt()).collect();
        let f = fit_points(&xs, &ys, FitModel::PowerLaw).unwrap();
        assert!((f.exponent_or_rate - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.ci95.0 <= f.exponent_or_rate && f.exponent_or_rate <= f.ci95.1);
    }

    #[test]
    fn exact_exponential() {
        let xs = [0.0, 1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2f64.powf(*x)).collect();
        let f = fit_points(&xs, &ys, FitModel::ExpGrowth).unwrap();
        assert!((f.exponent_or_rate - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_and_constant() {
        let f = fit_points(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0], FitModel::Linear).unwrap();
        assert!((f.exponent_or_rate - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        let c = fit_points(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], FitModel::Constant).unwrap();
        assert_eq!(c.exponent_or_rate, 2.0);
        assert!(c.ci95.0 < 2.0 && c.ci95.1 > 2.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_points(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], FitModel::Linear),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_points(&[1.0, 2.0], &[1.0, 2.0], FitModel::Linear).is_err());
        assert!(fit_points(&[1.0, 2.0, 3.0], &[1.0, 0.0, 3.0], FitModel::PowerLaw).is_err());
    }

    #[test]
    fn model_names() {
        assert_eq!("power-law".parse::<FitModel>().unwrap(), FitModel::PowerLaw);
        assert!("cubic".parse::<FitModel>().is_err());
    }
}
