//! Monte-Carlo experiment orchestration.
//!
//! [`run`] executes every sweep point of an [`ExperimentSpec`] and returns one
//! [`ExperimentRecord`] per point and metric. Sweep point `i` draws from
//! `SeededRng::new(seed, 0).substream(i)` and trial `t` of that point from its
//! `substream(t)`; empirical baselines use stream 1. Trials run on the rayon
//! pool and are reduced in trial order, so output does not depend on the
//! number of threads.

mod fit;
mod records;
mod spec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use fit::{
    fit, fit_points, select, workload_report, FitModel, FitResult, WorkloadReport, CANDIDATES_PER_CALL,
    RELAXATIONS_PER_CALL, RELAXATIONS_PER_DISTANCE, VISITS_PER_DISTANCE,
};
pub use records::{check_single_config, read_csv, write_csv, ExperimentRecord, Sidecar, CSV_COLUMNS};
pub use spec::{Baseline, ExperimentFamily, ExperimentSpec, Sweep};

use crate::bayes::{compare_ugs_strategies, Strategy, UgsComparison, UgsParams};
use crate::distribution::{Family, RewardDistribution, TailClass};
use crate::error::{Error, Result};
use crate::lattice::{
    estimate_r_star, estimate_reward_to_vertex, r_star_closed_form, run_until_suboptimal, shape_function_closed_form,
    StoppingRule, Vertex,
};
use crate::planning::{
    cone_field, estimate_continuous_r_star, optimal_plan_counted, receding_horizon_plan,
    run_continuous_until_suboptimal, PlanDump, RobotState, Solver,
};
use crate::poisson::{MarkedPointField, TiledPoissonField};
use crate::rng::SeededRng;
use crate::stats::Estimate;

/// `git describe` of the source tree at build time.
pub const VERSION: &str = env!("MAXREWARD_GIT_DESCRIBE");

pub const MEAN_REWARD: &str = "mean_reward";
pub const SHAPE: &str = "shape";
pub const STOPPING_DISTANCE: &str = "stopping_distance";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    /// Per-checkpoint comparisons, one per sweep point of a `ugs` run.
    pub ugs: Vec<UgsComparison>,
    /// One plan per trial when `dump_plans` is set.
    pub dumps: Vec<PlanDump>,
}

/// Progress callback argument: sweep point `done` of `total` finished.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
    pub sweep_value: f64,
}

pub fn run(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    Ok(run_full(spec, &mut |_| {})?.records)
}

pub fn run_full(spec: &ExperimentSpec, progress: &mut dyn FnMut(Progress)) -> Result<RunOutput> {
    spec.validate()?;
    let ctx = Ctx { spec, dist: spec.distribution()?, hash: spec.config_hash()? };
    let base = SeededRng::new(spec.seed, 0);
    let mut out = RunOutput::default();
    let mut cached_baseline = None;
    let total = spec.sweep.values.len();
    for (i, &x) in spec.sweep.values.iter().enumerate() {
        let rng = base.substream(i as u64);
        match spec.family {
            ExperimentFamily::LatticeMeanReward => ctx.lattice_mean_reward(x, &rng, &mut out)?,
            ExperimentFamily::LatticeSensing => ctx.lattice_sensing(i, x, &rng, &mut cached_baseline, &mut out)?,
            ExperimentFamily::ContinuousMeanReward => ctx.continuous_mean_reward(spec.alpha, x, x, &rng, &mut out)?,
            ExperimentFamily::Agility => ctx.continuous_mean_reward(x, spec.length, x, &rng, &mut out)?,
            ExperimentFamily::ContinuousSensing => {
                ctx.continuous_sensing(i, x, &rng, &mut cached_baseline, &mut out)?
            }
            ExperimentFamily::Workload => ctx.workload(x, &rng, &mut out)?,
            ExperimentFamily::Ugs => ctx.ugs(x, &rng, &mut out)?,
        }
        progress(Progress { done: i + 1, total, sweep_value: x });
    }
    Ok(out)
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    dist: RewardDistribution,
    hash: String,
}

fn trials_par<T: Send>(trials: usize, rng: &SeededRng, f: impl Fn(&SeededRng) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..trials as u64).into_par_iter().map(|t| f(&rng.substream(t))).collect()
}

fn baseline_rng(spec: &ExperimentSpec, point: u64) -> SeededRng {
    SeededRng::new(spec.seed, 1).substream(point)
}

impl Ctx<'_> {
    fn record(
        &self,
        x: f64,
        metric: &str,
        est: Estimate,
        censored: bool,
        mut extra: Map<String, Value>,
    ) -> ExperimentRecord {
        if let Family::Bernoulli { .. } = self.dist.family() {
            extra.insert("reward_values".into(), Value::from(vec![0.0, 1.0]));
        }
        let alpha = if self.spec.sweep.name == "alpha" { x } else { self.spec.alpha };
        ExperimentRecord {
            family: self.spec.family.name().into(),
            dist: self.dist.to_string(),
            lambda: self.spec.lambda,
            alpha,
            sweep_name: self.spec.sweep.name.clone(),
            sweep_value: x,
            trials: self.spec.trials,
            mean: est.mean,
            stderr: est.std_err,
            metric: metric.into(),
            config_hash: self.hash.clone(),
            censored,
            extra,
        }
    }

    fn lattice_mean_reward(&self, x: f64, rng: &SeededRng, out: &mut RunOutput) -> Result<()> {
        let size = x as usize;
        let rec = if self.spec.sweep.name == "k" {
            let e = estimate_reward_to_vertex(&self.dist, Vertex(size, size), self.spec.trials, rng)?;
            let mut extra = Map::new();
            if let Some(g) = shape_function_closed_form(&self.dist, (1.0, 1.0)) {
                extra.insert("closed_form".into(), json!(g));
            }
            let scaled = Estimate { mean: e.mean / x, std_err: e.std_err / x };
            self.record(x, SHAPE, scaled, false, extra)
        } else {
            let e = estimate_r_star(&self.dist, size, self.spec.trials, rng)?;
            let mut extra = Map::new();
            if let Some(r) = r_star_closed_form(&self.dist) {
                extra.insert("closed_form".into(), json!(r));
            }
            self.record(x, MEAN_REWARD, e, false, extra)
        };
        out.records.push(rec);
        Ok(())
    }

    fn reject_heavy(&self) -> Result<()> {
        if self.dist.tail_class() == TailClass::HeavyTailed {
            return Err(Error::UnsatisfiableBaseline(format!(
                "{} is heavy-tailed, so the asymptotic mean reward is infinite and no run would pass its first leg; \
                 use baseline=scaled:<exponent> (for example scaled:1.1) or a fixed baseline",
                self.dist
            )));
        }
        Ok(())
    }

    fn lattice_baseline(&self, point: usize, m: usize, cache: &mut Option<f64>) -> Result<(f64, &'static str)> {
        let spec = self.spec;
        match spec.baseline {
            Baseline::Fixed(v) => Ok((v, "fixed")),
            Baseline::Scaled(e) => {
                let n = ((m as f64).powf(e).round() as usize).max(1);
                let est = estimate_r_star(&self.dist, n, spec.baseline_trials, &baseline_rng(spec, point as u64))?;
                Ok((est.mean, "scaled"))
            }
            Baseline::Auto | Baseline::Empirical => {
                self.reject_heavy()?;
                if spec.baseline == Baseline::Auto {
                    if let Some(r) = r_star_closed_form(&self.dist) {
                        return Ok((r, "closed-form"));
                    }
                }
                if cache.is_none() {
                    let est = estimate_r_star(
                        &self.dist,
                        spec.baseline_n,
                        spec.baseline_trials,
                        &baseline_rng(spec, u64::MAX),
                    )?;
                    *cache = Some(est.mean);
                }
                Ok((cache.expect("just filled"), "empirical"))
            }
        }
    }

    fn lattice_sensing(
        &self,
        point: usize,
        x: f64,
        rng: &SeededRng,
        cache: &mut Option<f64>,
        out: &mut RunOutput,
    ) -> Result<()> {
        let m = x as usize;
        let (baseline, source) = self.lattice_baseline(point, m, cache)?;
        let rule = StoppingRule::new(self.spec.delta, baseline, self.spec.max_steps)?;
        let runs = trials_par(self.spec.trials, rng, |r| run_until_suboptimal(&self.dist, m, &rule, r))?;
        let distances: Vec<f64> = runs.iter().map(|o| o.distance as f64).collect();
        let capped = runs.iter().filter(|o| o.capped).count();
        let extra = stop_extra(capped, baseline, source, self.spec.max_steps as f64);
        out.records.push(self.record(x, STOPPING_DISTANCE, Estimate::from_samples(&distances), capped > 0, extra));
        Ok(())
    }

    fn continuous_baseline(&self, point: usize, s: f64, cache: &mut Option<f64>) -> Result<(f64, &'static str)> {
        let spec = self.spec;
        let estimate = |length: f64, rng: &SeededRng| {
            estimate_continuous_r_star(spec.lambda, &self.dist, spec.alpha, length, spec.baseline_trials, rng)
        };
        match spec.baseline {
            Baseline::Fixed(v) => Ok((v, "fixed")),
            Baseline::Scaled(e) => Ok((estimate(s.powf(e), &baseline_rng(spec, point as u64))?.mean, "scaled")),
            Baseline::Auto | Baseline::Empirical => {
                self.reject_heavy()?;
                if let (Baseline::Auto, Family::Constant { value }) = (spec.baseline, self.dist.family()) {
                    return Ok((value * (2.0 * spec.lambda * spec.alpha).sqrt(), "closed-form"));
                }
                if cache.is_none() {
                    *cache = Some(estimate(spec.baseline_length, &baseline_rng(spec, u64::MAX))?.mean);
                }
                Ok((cache.expect("just filled"), "empirical"))
            }
        }
    }

    fn continuous_sensing(
        &self,
        point: usize,
        s: f64,
        rng: &SeededRng,
        cache: &mut Option<f64>,
        out: &mut RunOutput,
    ) -> Result<()> {
        let spec = self.spec;
        let (baseline, source) = self.continuous_baseline(point, s, cache)?;
        let rule = StoppingRule::new(spec.delta, baseline, 0)?;
        let runs = trials_par(spec.trials, rng, |r| {
            run_continuous_until_suboptimal(spec.lambda, &self.dist, spec.alpha, s, &rule, spec.max_distance, r)
        })?;
        let distances: Vec<f64> = runs.iter().map(|o| o.distance).collect();
        let capped = runs.iter().filter(|o| o.capped).count();
        let extra = stop_extra(capped, baseline, source, spec.max_distance);
        out.records.push(self.record(s, STOPPING_DISTANCE, Estimate::from_samples(&distances), capped > 0, extra));
        Ok(())
    }

    fn continuous_mean_reward(
        &self,
        alpha: f64,
        length: f64,
        x: f64,
        rng: &SeededRng,
        out: &mut RunOutput,
    ) -> Result<()> {
        let spec = self.spec;
        let runs = trials_par(spec.trials, rng, |r| {
            let field = cone_field(spec.lambda, self.dist, alpha, length, r)?;
            let (plan, counters) =
                optimal_plan_counted(field.targets(), RobotState::ORIGIN, length, alpha, Solver::Dominance)?;
            let dump = spec.dump_plans.then(|| {
                let params = json!({
                    "family": spec.family.name(),
                    "dist": self.dist.to_string(),
                    "lambda": spec.lambda,
                    "alpha": alpha,
                    "length": length,
                });
                PlanDump::new(r, params, &plan, counters)
            });
            Ok((plan.total_reward / length, dump))
        })?;
        let samples: Vec<f64> = runs.iter().map(|r| r.0).collect();
        out.records.push(self.record(x, MEAN_REWARD, Estimate::from_samples(&samples), false, Map::new()));
        out.dumps.extend(runs.into_iter().filter_map(|r| r.1));
        Ok(())
    }

    fn workload(&self, x: f64, rng: &SeededRng, out: &mut RunOutput) -> Result<()> {
        let spec = self.spec;
        let (sensing, alpha) = if spec.sweep.name == "alpha" { (spec.sensing, x) } else { (x, spec.alpha) };
        let runs = trials_par(spec.trials, rng, |r| {
            let field = TiledPoissonField::new(spec.lambda, self.dist, sensing, alpha * sensing, r)?;
            let rh = receding_horizon_plan(&field, RobotState::ORIGIN, spec.length, sensing, alpha, Solver::Scan)?;
            Ok(rh.counters)
        })?;
        let per = |f: &dyn Fn(&crate::planning::WorkloadCounters) -> f64| {
            Estimate::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
        };
        let metrics: [(&str, Estimate); 4] = [
            (RELAXATIONS_PER_CALL, per(&|c| c.dp_relaxations as f64 / c.planner_calls as f64)),
            (RELAXATIONS_PER_DISTANCE, per(&|c| c.dp_relaxations as f64 / c.distance)),
            (VISITS_PER_DISTANCE, per(&|c| c.targets_visited as f64 / c.distance)),
            (CANDIDATES_PER_CALL, per(&|c| c.candidates_seen as f64 / c.planner_calls as f64)),
        ];
        for (metric, est) in metrics {
            let mut extra = Map::new();
            extra.insert("sensing".into(), json!(sensing));
            extra.insert("length".into(), json!(spec.length));
            out.records.push(self.record(x, metric, est, false, extra));
        }
        Ok(())
    }

    fn ugs(&self, length: f64, rng: &SeededRng, out: &mut RunOutput) -> Result<()> {
        let spec = self.spec;
        let params = UgsParams {
            lambda: spec.lambda,
            mean_precision: spec.mean_precision,
            length,
            alpha: spec.alpha,
            prior_precision: spec.prior_precision,
            trials: spec.trials,
        };
        let cmp = compare_ugs_strategies(params, rng)?;
        for strategy in [Strategy::Homogeneous, Strategy::Randomized] {
            let row = cmp.final_row(strategy);
            let dist = strategy.distribution(spec.mean_precision)?.to_string();
            let mut r = self.record(length, &format!("{}_gain", strategy.name()), row.gain, false, Map::new());
            r.dist = dist.clone();
            out.records.push(r);
            let var = row.posterior_variance;
            let mut r = self.record(length, &format!("{}_variance", strategy.name()), var, false, Map::new());
            r.dist = dist;
            out.records.push(r);
        }
        let mut r = self.record(length, "gain_gap", cmp.gap, false, Map::new());
        r.dist = "paired".into();
        out.records.push(r);
        out.ugs.push(cmp);
        Ok(())
    }
}

fn stop_extra(capped: usize, baseline: f64, source: &str, cap: f64) -> Map<String, Value> {
    let mut extra = Map::new();
    extra.insert("capped".into(), json!(capped));
    extra.insert("baseline".into(), json!(baseline));
    extra.insert("baseline_source".into(), json!(source));
    extra.insert("cap".into(), json!(cap));
    extra
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayOutcome {
    pub matches: bool,
    pub recorded_reward: f64,
    pub replayed_reward: f64,
    pub field: MarkedPointField,
    pub dump: PlanDump,
}

/// Regenerates the field of a dumped trial, re-plans it, and compares the
/// result with the dump.
pub fn replay(dump: &PlanDump) -> Result<ReplayOutcome> {
    let p = &dump.params;
    let num = |key: &str| {
        p.get(key).and_then(Value::as_f64).ok_or_else(|| Error::Format(format!("plan dump params lack `{key}`")))
    };
    let dist: RewardDistribution = p
        .get("dist")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Format("plan dump params lack `dist`".into()))?
        .parse()?;
    let (lambda, alpha, length) = (num("lambda")?, num("alpha")?, num("length")?);
    let rng = SeededRng::new(dump.seed, dump.stream);
    let field = cone_field(lambda, dist, alpha, length, &rng)?;
    let (plan, counters) = optimal_plan_counted(field.targets(), RobotState::ORIGIN, length, alpha, Solver::Dominance)?;
    let again = PlanDump::new(&rng, p.clone(), &plan, counters);
    Ok(ReplayOutcome {
        matches: again.total_reward == dump.total_reward
            && again.visited == dump.visited
            && again.counters == dump.counters,
        recorded_reward: dump.total_reward,
        replayed_reward: again.total_reward,
        field,
        dump: again,
    })
}

/// Outcome of one acceptance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn range(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value >= lo && value <= hi, format!("{value:.4} in [{lo:.4}, {hi:.4}]"))
    }
}

fn fit_check(name: &str, records: &[ExperimentRecord], model: FitModel, lo: f64, hi: f64) -> Check {
    match fit(records, model) {
        Ok(f) => Check::range(name, f.exponent_or_rate, lo, hi),
        Err(e) => Check::new(name, false, e.to_string()),
    }
}

fn sensing_checks(spec: &ExperimentSpec, records: &[ExperimentRecord], checks: &mut Vec<Check>) {
    let semi = fit(records, FitModel::ExpGrowth);
    if let Baseline::Scaled(_) = spec.baseline {
        match (semi, fit(records, FitModel::Linear)) {
            (Ok(semi), Ok(lin)) => {
                checks.push(Check::range("linear growth r^2", lin.r_squared, 0.9, 1.0));
                checks.push(Check::new(
                    "semi-log fit inferior",
                    semi.r_squared <= lin.r_squared - 0.05,
                    format!("semi-log r^2 {:.4} vs linear r^2 {:.4}", semi.r_squared, lin.r_squared),
                ));
            }
            (Err(e), _) | (_, Err(e)) => checks.push(Check::new("stopping-distance fit", false, e.to_string())),
        }
    } else {
        match semi {
            Ok(semi) => checks.push(Check::range("exponential growth r^2", semi.r_squared, 0.9, 1.0)),
            Err(e) => checks.push(Check::new("stopping-distance fit", false, e.to_string())),
        }
    }
}

/// The acceptance checks that apply to a finished run, with the tolerances of
/// the corresponding published claims.
pub fn checks(spec: &ExperimentSpec, output: &RunOutput) -> Result<Vec<Check>> {
    let dist = spec.distribution()?;
    let records = &output.records;
    let mut out = Vec::new();
    let heavy_exponent = match dist.family() {
        Family::Pareto { shape, .. } => Some(2.0 / shape - 1.0),
        _ => None,
    };
    match spec.family {
        ExperimentFamily::LatticeMeanReward => {
            let metric = if spec.sweep.name == "k" { SHAPE } else { MEAN_REWARD };
            let rs = select(records, metric);
            if let Some(e) = heavy_exponent {
                out.push(fit_check("power-law exponent", &rs, FitModel::PowerLaw, e - 0.10, e + 0.10));
            }
            let closed =
                if metric == SHAPE { shape_function_closed_form(&dist, (1.0, 1.0)) } else { r_star_closed_form(&dist) };
            if let (Some(c), Some(r)) = (closed, rs.last()) {
                out.push(Check::range("closed-form limit (5%)", r.mean, 0.95 * c, 1.05 * c));
            }
            if let (Family::Constant { value }, MEAN_REWARD) = (dist.family(), metric) {
                let exact = rs.iter().all(|r| r.mean == value && r.stderr == 0.0);
                out.push(Check::new("constant rewards exact", exact, format!("{} records", rs.len())));
            }
            if metric == SHAPE {
                let monotone = rs.windows(2).all(|w| w[1].mean >= w[0].mean);
                out.push(Check::new(
                    "monotone approach",
                    monotone,
                    format!("{:?}", rs.iter().map(|r| r.mean).collect::<Vec<_>>()),
                ));
            }
        }
        ExperimentFamily::LatticeSensing | ExperimentFamily::ContinuousSensing => {
            sensing_checks(spec, &select(records, STOPPING_DISTANCE), &mut out);
        }
        ExperimentFamily::ContinuousMeanReward => {
            let rs = select(records, MEAN_REWARD);
            if let Some(e) = heavy_exponent {
                out.push(fit_check("power-law exponent", &rs, FitModel::PowerLaw, e - 0.15, e + 0.15));
            }
            if let (Family::Constant { value }, Some(r)) = (dist.family(), rs.last()) {
                let rate = value * (2.0 * spec.lambda * spec.alpha).sqrt();
                out.push(Check::range("unit-reward rate", r.mean, 0.90 * rate, 1.025 * rate));
            }
        }
        ExperimentFamily::Agility => {
            out.push(fit_check("agility exponent", &select(records, MEAN_REWARD), FitModel::PowerLaw, 0.45, 0.55));
        }
        ExperimentFamily::Workload => {
            let push = |out: &mut Vec<Check>, name: &str, metric: &str, lo: f64, hi: f64| {
                out.push(fit_check(name, &select(records, metric), FitModel::PowerLaw, lo, hi));
            };
            if spec.sweep.name == "alpha" {
                push(&mut out, "relaxations per distance vs alpha", RELAXATIONS_PER_DISTANCE, 1.6, 2.4);
                push(&mut out, "visits per distance vs alpha", VISITS_PER_DISTANCE, 0.35, 0.65);
            } else {
                push(&mut out, "relaxations per call vs S", RELAXATIONS_PER_CALL, 3.5, 4.5);
                push(&mut out, "relaxations per distance vs S", RELAXATIONS_PER_DISTANCE, 2.5, 3.5);
                push(&mut out, "visits per distance vs S", VISITS_PER_DISTANCE, -0.15, 0.15);
            }
        }
        ExperimentFamily::Ugs => {
            for cmp in &output.ugs {
                let l = cmp.params.length;
                let gap_lo = cmp.gap.mean - 1.96 * cmp.gap.std_err;
                out.push(Check::new(
                    format!("L={l}: positive paired gap"),
                    gap_lo > 0.0,
                    format!("lower 95% bound {gap_lo:.4}"),
                ));
                let hom: Vec<f64> = cmp.checkpoints(Strategy::Homogeneous).map(|r| r.posterior_variance.mean).collect();
                let ran: Vec<f64> = cmp.checkpoints(Strategy::Randomized).map(|r| r.posterior_variance.mean).collect();
                let below = hom.iter().zip(&ran).all(|(h, r)| r < h);
                let worst = hom.iter().zip(&ran).map(|(h, r)| r / h).fold(0.0, f64::max);
                out.push(Check::new(
                    format!("L={l}: randomized variance lower at every checkpoint"),
                    below,
                    format!("largest randomized/homogeneous ratio {worst:.4} over {} checkpoints", hom.len()),
                ));
                if spec.lambda == 1.0 && spec.alpha == 1.0 && spec.mean_precision == 1.0 {
                    let g = cmp.final_row(Strategy::Randomized).gain.mean;
                    out.push(Check::range(&format!("L={l}: randomized gain"), g, 2.0, f64::INFINITY));
                }
            }
        }
    }
    Ok(out)
}
