//! Experiment specifications.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::distribution::RewardDistribution;
use crate::error::{Error, Result};
use crate::lattice::{DEFAULT_DELTA, DEFAULT_MAX_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentFamily {
    LatticeMeanReward,
    LatticeSensing,
    ContinuousMeanReward,
    ContinuousSensing,
    Agility,
    Workload,
    Ugs,
}

impl ExperimentFamily {
    pub const ALL: [ExperimentFamily; 7] = [
        ExperimentFamily::LatticeMeanReward,
        ExperimentFamily::LatticeSensing,
        ExperimentFamily::ContinuousMeanReward,
        ExperimentFamily::ContinuousSensing,
        ExperimentFamily::Agility,
        ExperimentFamily::Workload,
        ExperimentFamily::Ugs,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentFamily::LatticeMeanReward => "lattice-mean-reward",
            ExperimentFamily::LatticeSensing => "lattice-sensing",
            ExperimentFamily::ContinuousMeanReward => "continuous-mean-reward",
            ExperimentFamily::ContinuousSensing => "continuous-sensing",
            ExperimentFamily::Agility => "agility",
            ExperimentFamily::Workload => "workload",
            ExperimentFamily::Ugs => "ugs",
        }
    }

    /// Sweep variables the family accepts; the first is the default.
    pub fn sweep_names(&self) -> &'static [&'static str] {
        match self {
            ExperimentFamily::LatticeMeanReward => &["n", "k"],
            ExperimentFamily::LatticeSensing => &["m"],
            ExperimentFamily::ContinuousMeanReward => &["L"],
            ExperimentFamily::ContinuousSensing => &["S"],
            ExperimentFamily::Agility => &["alpha"],
            ExperimentFamily::Workload => &["S", "alpha"],
            ExperimentFamily::Ugs => &["L"],
        }
    }
}

impl fmt::Display for ExperimentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Reference mean reward for the stopping rule.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Baseline {
    /// Closed form when the distribution has one, otherwise an empirical
    /// estimate; rejected for heavy tails.
    #[default]
    Auto,
    Fixed(f64),
    /// Monte-Carlo estimate at the spec's baseline size.
    Empirical,
    /// Monte-Carlo estimate of the mean reward at distance `m^e` (lattice) or
    /// `S^e` (continuous) for sensing range `m` or `S`.
    Scaled(f64),
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Auto => f.write_str("auto"),
            Baseline::Fixed(v) => write!(f, "fixed:{v}"),
            Baseline::Empirical => f.write_str("empirical"),
            Baseline::Scaled(e) => write!(f, "scaled:{e}"),
        }
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad baseline `{s}`; use auto, empirical, fixed:<value> or scaled:<exponent>"
            ))
        };
        match s.split_once(':') {
            None if s == "auto" => Ok(Baseline::Auto),
            None if s == "empirical" => Ok(Baseline::Empirical),
            Some(("fixed", v)) => v.parse().map(Baseline::Fixed).map_err(|_| bad()),
            Some(("scaled", v)) => v.parse().map(Baseline::Scaled).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Baseline {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Baseline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

/// Everything that determines an experiment's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: ExperimentFamily,
    /// Reward law in the `family:key=value,...` grammar.
    pub dist: String,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    /// Target intensity.
    pub lambda: f64,
    /// Agility, when not swept.
    pub alpha: f64,
    /// Mission length for the agility, workload and ugs families.
    pub length: f64,
    /// Sensing range for workload runs that sweep `alpha`.
    pub sensing: f64,
    pub baseline: Baseline,
    /// Lattice size `n` of the empirical baseline.
    pub baseline_n: usize,
    /// Travel distance of the empirical continuous baseline.
    pub baseline_length: f64,
    pub baseline_trials: usize,
    /// Lattice step cap of the stopping experiment.
    pub max_steps: u64,
    /// Distance cap of the continuous stopping experiment.
    pub max_distance: f64,
    pub mean_precision: f64,
    pub prior_precision: f64,
    /// Emit one plan per trial for the continuous families.
    pub dump_plans: bool,
    /// Output CSV path; chosen by the caller when absent. Not part of the
    /// config hash.
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Defaults for `family`, shaped after the published sweeps.
    pub fn preset(family: ExperimentFamily) -> Self {
        let base = Self {
            family,
            dist: "exponential:rate=1".into(),
            sweep: Sweep { name: family.sweep_names()[0].into(), values: vec![] },
            trials: 1000,
            seed: 0,
            delta: DEFAULT_DELTA,
            lambda: 1.0,
            alpha: 1.0,
            length: 100.0,
            sensing: 8.0,
            baseline: Baseline::Auto,
            baseline_n: 10_000,
            baseline_length: 200.0,
            baseline_trials: 2000,
            max_steps: DEFAULT_MAX_STEPS,
            max_distance: 10_000.0,
            mean_precision: 1.0,
            prior_precision: 1.0,
            dump_plans: false,
            output: None,
        };
        let values: Vec<f64> = match family {
            ExperimentFamily::LatticeMeanReward => vec![10.0, 30.0, 100.0, 300.0, 1000.0],
            ExperimentFamily::LatticeSensing => (4..=16).map(f64::from).collect(),
            ExperimentFamily::ContinuousMeanReward => vec![10.0, 20.0, 50.0, 100.0, 200.0],
            ExperimentFamily::ContinuousSensing => (1..=6).map(f64::from).collect(),
            ExperimentFamily::Agility => vec![0.25, 0.5, 1.0, 2.0, 4.0],
            ExperimentFamily::Workload => (2..=16).map(f64::from).collect(),
            ExperimentFamily::Ugs => vec![100.0],
        };
        let mut spec = Self { sweep: Sweep { values, ..base.sweep.clone() }, ..base };
        match family {
            ExperimentFamily::Agility => {
                spec.lambda = 10.0;
                spec.length = 30.0;
                spec.trials = 300;
            }
            ExperimentFamily::Workload => {
                spec.dist = "bernoulli:p=0.5".into();
                spec.length = 256.0;
                spec.trials = 200;
            }
            ExperimentFamily::Ugs => {
                spec.dist = "exponential:rate=1".into();
            }
            _ => {}
        }
        spec
    }

    pub fn distribution(&self) -> Result<RewardDistribution> {
        self.dist.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.distribution()?;
        if self.trials < 2 {
            return bad(format!("trials must be at least 2, got {}", self.trials));
        }
        if self.sweep.values.is_empty() {
            return bad("sweep has no points".into());
        }
        if !self.family.sweep_names().contains(&self.sweep.name.as_str()) {
            return bad(format!(
                "family {} cannot sweep `{}`; choose one of {:?}",
                self.family,
                self.sweep.name,
                self.family.sweep_names()
            ));
        }
        if self.sweep.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("sweep values must be positive and finite".into());
        }
        let integral = matches!(self.sweep.name.as_str(), "n" | "k" | "m");
        if integral && self.sweep.values.iter().any(|v| v.fract() != 0.0) {
            return bad(format!("sweep `{}` takes integers", self.sweep.name));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("length", self.length),
            ("sensing", self.sensing),
            ("delta", self.delta),
            ("mean_precision", self.mean_precision),
            ("prior_precision", self.prior_precision),
            ("max_distance", self.max_distance),
            ("baseline_length", self.baseline_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.baseline_trials < 2 || self.baseline_n == 0 {
            return bad("baseline needs n >= 1 and at least 2 trials".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, with the output path cleared.
    pub fn config_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical)?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Applies `key=value`. The value is read as JSON when it parses and as a
    /// string otherwise; `sweep.values` also accepts a comma list.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = if key == "sweep.values" && !raw.starts_with('[') {
            let vals: Vec<f64> = raw
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad number `{s}`"))))
                .collect::<Result<_>>()?;
            serde_json::to_value(vals)?
        } else {
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
        };
        let mut doc = serde_json::to_value(&*self)?;
        let mut slot = &mut doc;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| Error::InvalidArgument(format!("unknown config key `{key}`")))?;
        }
        *slot = value;
        *self =
            serde_json::from_value(doc).map_err(|e| Error::InvalidArgument(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    /// Merges a TOML document over this spec. Keys absent from the document
    /// keep their current values.
    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let patch = serde_json::to_value(table)?;
        let mut doc = serde_json::to_value(&*self)?;
        merge_json(&mut doc, patch);
        *self = serde_json::from_value(doc).map_err(|e| Error::Format(format!("config: {e}")))?;
        Ok(())
    }
}

fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for f in ExperimentFamily::ALL {
            let s = ExperimentSpec::preset(f);
            s.validate().unwrap();
            assert_eq!(f.name().parse::<ExperimentFamily>().unwrap(), f);
        }
        assert!(matches!("nope".parse::<ExperimentFamily>(), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn hash_ignores_output_only() {
        let a = ExperimentSpec::preset(ExperimentFamily::Agility);
        let mut b = a.clone();
        b.output = Some("x.csv".into());
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        b.seed = 1;
        assert_ne!(a.config_hash().unwrap(), b.config_hash().unwrap());
    }

    #[test]
    fn overrides() {
        let mut s = ExperimentSpec::preset(ExperimentFamily::LatticeSensing);
        s.apply_override("trials=17").unwrap();
        s.apply_override("dist=pareto:xm=1,alpha=1.5").unwrap();
        s.apply_override("baseline=scaled:1.1").unwrap();
        s.apply_override("sweep.values=4,8").unwrap();
        assert_eq!(s.trials, 17);
        assert_eq!(s.dist, "pareto:xm=1,alpha=1.5");
        assert_eq!(s.baseline, Baseline::Scaled(1.1));
        assert_eq!(s.sweep.values, vec![4.0, 8.0]);
        assert!(s.apply_override("bogus=1").is_err());
        assert!(s.apply_override("trials=many").is_err());
    }

    #[test]
    fn toml_merge_keeps_defaults() {
        let mut s = ExperimentSpec::preset(ExperimentFamily::Agility);
        s.merge_toml("trials = 12\nseed = 9\n[sweep]\nvalues = [1.0, 2.0, 4.0]\n").unwrap();
        assert_eq!((s.trials, s.seed), (12, 9));
        assert_eq!(s.sweep.name, "alpha");
        assert_eq!(s.lambda, 10.0);
        assert!(s.merge_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn validation_errors() {
        let mut s = ExperimentSpec::preset(ExperimentFamily::LatticeMeanReward);
        s.sweep.values.clear();
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::preset(ExperimentFamily::LatticeMeanReward);
        s.sweep.name = "alpha".into();
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::preset(ExperimentFamily::LatticeMeanReward);
        s.dist = "weibull:k=2".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn baseline_grammar() {
        for b in [Baseline::Auto, Baseline::Empirical, Baseline::Fixed(2.0), Baseline::Scaled(1.1)] {
            assert_eq!(b.to_string().parse::<Baseline>().unwrap(), b);
        }
        assert!("fixed".parse::<Baseline>().is_err());
    }
}
