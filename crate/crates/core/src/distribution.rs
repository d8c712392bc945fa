//! Reward distributions.
//!
//! Every family is sampled by inverting its CDF at a single uniform draw, so a
//! sample is a pure function of one stream position. That is what lets lattice
//! fields assign a reward to a vertex without materializing its neighbours.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Parameters of a reward law. Use [`RewardDistribution::new`] to validate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// Degenerate at `value`.
    Constant {
        value: f64,
    },
    /// Reward 1 with probability `p`, else 0.
    Bernoulli {
        p: f64,
    },
    /// Support `{1, 2, 3, ...}`, `P(X = k) = p (1 - p)^(k - 1)`.
    Geometric {
        p: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `P(X <= x) = 1 - (scale / x)^shape` for `x >= scale`.
    Pareto {
        scale: f64,
        shape: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    LightTailed,
    HeavyTailed,
}

/// Mean and standard deviation. Either may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std_dev: f64,
}

/// A validated reward distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct RewardDistribution(Family);

impl TryFrom<Family> for RewardDistribution {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        Self::new(family)
    }
}

impl From<RewardDistribution> for Family {
    fn from(d: RewardDistribution) -> Family {
        d.0
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("{name} must lie in (0, 1], got {p}")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RewardDistribution {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::Constant { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidDistribution(format!(
                        "constant reward must be non-negative and finite, got {value}"
                    )));
                }
            }
            Family::Bernoulli { p } | Family::Geometric { p } => check_probability("p", p)?,
            Family::Exponential { rate } => check_positive("rate", rate)?,
            Family::Pareto { scale, shape } => {
                check_positive("xm", scale)?;
                check_positive("alpha", shape)?;
            }
        }
        Ok(Self(family))
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Family::Constant { value })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(Family::Bernoulli { p })
    }

    pub fn geometric(p: f64) -> Result<Self> {
        Self::new(Family::Geometric { p })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        Self::new(Family::Pareto { scale, shape })
    }

    pub fn family(&self) -> Family {
        self.0
    }

    pub fn tail_class(&self) -> TailClass {
        match self.0 {
            Family::Pareto { .. } => TailClass::HeavyTailed,
            _ => TailClass::LightTailed,
        }
    }

    /// Inverse CDF evaluated at `u` in `[0, 1)`.
    #[inline]
    pub fn quantile(&self, u: f64) -> f64 {
        match self.0 {
            Family::Constant { value } => value,
            Family::Bernoulli { p } => {
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Geometric { p } => {
                if p >= 1.0 {
                    1.0
                } else {
                    ((1.0 - u).ln() / (1.0 - p).ln()).floor() + 1.0
                }
            }
            Family::Exponential { rate } => -(1.0 - u).ln() / rate,
            Family::Pareto { scale, shape } => scale * (1.0 - u).powf(-1.0 / shape),
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        self.quantile(rng.uniform())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.0 {
            Family::Constant { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Family::Geometric { p } => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0 - (1.0 - p).powf(x.floor())
                }
            }
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
            Family::Pareto { scale, shape } => {
                if x < scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(shape)
                }
            }
        }
    }

    pub fn moments(&self) -> Moments {
        match self.0 {
            Family::Constant { value } => Moments { mean: value, std_dev: 0.0 },
            Family::Bernoulli { p } => Moments { mean: p, std_dev: (p * (1.0 - p)).sqrt() },
            Family::Geometric { p } => Moments { mean: 1.0 / p, std_dev: (1.0 - p).sqrt() / p },
            Family::Exponential { rate } => Moments { mean: 1.0 / rate, std_dev: 1.0 / rate },
            Family::Pareto { scale, shape } => {
                let mean = if shape > 1.0 { shape * scale / (shape - 1.0) } else { f64::INFINITY };
                let std_dev = if shape > 2.0 {
                    (scale * scale * shape / ((shape - 1.0).powi(2) * (shape - 2.0))).sqrt()
                } else {
                    f64::INFINITY
                };
                Moments { mean, std_dev }
            }
        }
    }

    /// The same family with its mean rescaled to `mean`. Used to build equal-mean
    /// comparisons. Bernoulli has no free scale and is rejected.
    pub fn with_mean(&self, mean: f64) -> Result<Self> {
        check_positive("mean", mean)?;
        match self.0 {
            Family::Constant { .. } => Self::constant(mean),
            Family::Exponential { .. } => Self::exponential(1.0 / mean),
            Family::Geometric { .. } => {
                if mean < 1.0 {
                    return Err(Error::InvalidDistribution(format!("geometric mean must be at least 1, got {mean}")));
                }
                Self::geometric(1.0 / mean)
            }
            Family::Pareto { shape, .. } => {
                if shape <= 1.0 {
                    return Err(Error::InvalidDistribution("pareto with alpha <= 1 has no finite mean".into()));
                }
                Self::pareto(mean * (shape - 1.0) / shape, shape)
            }
            Family::Bernoulli { .. } => {
                Err(Error::InvalidDistribution("bernoulli rewards cannot be rescaled to an arbitrary mean".into()))
            }
        }
    }
}

impl fmt::Display for RewardDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Family::Constant { value } => write!(f, "constant:c={value}"),
            Family::Bernoulli { p } => write!(f, "bernoulli:p={p}"),
            Family::Geometric { p } => write!(f, "geometric:p={p}"),
            Family::Exponential { rate } => write!(f, "exponential:rate={rate}"),
            Family::Pareto { scale, shape } => write!(f, "pareto:xm={scale},alpha={shape}"),
        }
    }
}

impl FromStr for RewardDistribution {
    type Err = Error;

    /// Parses `name:key=value[,key=value]`, e.g. `pareto:xm=1,alpha=1.5`.
    fn from_str(spec: &str) -> Result<Self> {
        let bad = |reason: String| Error::DistributionSpec { spec: spec.to_string(), reason };
        let (name, params) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        let mut kv = Vec::new();
        for part in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| bad(format!("`{}` is not a number", v.trim())))?;
            kv.push((k.trim().to_ascii_lowercase(), v));
        }
        let take = |key: &str| -> Result<f64> {
            kv.iter().find(|(k, _)| k == key).map(|&(_, v)| v).ok_or_else(|| bad(format!("missing parameter `{key}`")))
        };
        let allowed: &[&str] = match name.to_ascii_lowercase().as_str() {
            "constant" => &["c"],
            "bernoulli" | "geometric" => &["p"],
            "exponential" => &["rate"],
            "pareto" => &["xm", "alpha"],
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(bad(format!("unexpected parameter `{k}`")));
        }
        let family = match name.to_ascii_lowercase().as_str() {
            "constant" => Family::Constant { value: take("c")? },
            "bernoulli" => Family::Bernoulli { p: take("p")? },
            "geometric" => Family::Geometric { p: take("p")? },
            "exponential" => Family::Exponential { rate: take("rate")? },
            _ => Family::Pareto { scale: take("xm")?, shape: take("alpha")? },
        };
        Self::new(family).map_err(|e| bad(e.to_string()))
    }
}
