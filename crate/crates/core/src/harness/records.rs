//! Experiment records, their CSV form, and the JSON sidecar.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::spec::ExperimentSpec;
use crate::error::{Error, Result};

/// Aggregate of one metric at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub family: String,
    pub dist: String,
    pub lambda: f64,
    pub alpha: f64,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub metric: String,
    pub config_hash: String,
    /// Some trial hit a cap, so `mean` underestimates the true mean.
    pub censored: bool,
    /// Further per-record values, written into `extra_json`.
    pub extra: Map<String, Value>,
}

pub const CSV_COLUMNS: [&str; 10] =
    ["family", "dist", "lambda", "alpha", "sweep_name", "sweep_value", "trials", "mean", "stderr", "extra_json"];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    family: String,
    dist: String,
    lambda: f64,
    alpha: f64,
    sweep_name: String,
    sweep_value: f64,
    trials: usize,
    mean: f64,
    stderr: f64,
    extra_json: String,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

impl ExperimentRecord {
    fn to_row(&self) -> Result<CsvRow> {
        let mut extra = Map::new();
        extra.insert("metric".into(), Value::from(self.metric.clone()));
        extra.insert("config_hash".into(), Value::from(self.config_hash.clone()));
        extra.insert("censored".into(), Value::from(self.censored));
        for (k, v) in &self.extra {
            extra.insert(k.clone(), v.clone());
        }
        Ok(CsvRow {
            family: self.family.clone(),
            dist: self.dist.clone(),
            lambda: self.lambda,
            alpha: self.alpha,
            sweep_name: self.sweep_name.clone(),
            sweep_value: self.sweep_value,
            trials: self.trials,
            mean: self.mean,
            stderr: self.stderr,
            extra_json: serde_json::to_string(&extra)?,
        })
    }

    fn from_row(row: CsvRow) -> Result<Self> {
        let mut extra: Map<String, Value> = serde_json::from_str(&row.extra_json)?;
        let take_str = |extra: &mut Map<String, Value>, key: &str| -> Result<String> {
            match extra.remove(key) {
                Some(Value::String(s)) => Ok(s),
                _ => Err(Error::Format(format!("extra_json lacks `{key}`"))),
            }
        };
        let metric = take_str(&mut extra, "metric")?;
        let config_hash = take_str(&mut extra, "config_hash")?;
        let censored = match extra.remove("censored") {
            Some(Value::Bool(b)) => b,
            _ => return Err(Error::Format("extra_json lacks `censored`".into())),
        };
        Ok(Self {
            family: row.family,
            dist: row.dist,
            lambda: row.lambda,
            alpha: row.alpha,
            sweep_name: row.sweep_name,
            sweep_value: row.sweep_value,
            trials: row.trials,
            mean: row.mean,
            stderr: row.stderr,
            metric,
            config_hash,
            censored,
            extra,
        })
    }
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_COLUMNS).map_err(csv_error)?;
    }
    for r in records {
        out.serialize(r.to_row()?).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ExperimentRecord>> {
    let mut input = csv::Reader::from_reader(r);
    let headers = input.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Format(format!("unexpected CSV columns {headers:?}")));
    }
    input.deserialize::<CsvRow>().map(|row| ExperimentRecord::from_row(row.map_err(csv_error)?)).collect()
}

/// Errors unless every record carries the same config hash.
pub fn check_single_config(records: &[ExperimentRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.config_hash != first.config_hash) {
            return Err(Error::MixedConfig(first.config_hash.clone(), other.config_hash.clone()));
        }
    }
    Ok(())
}

/// Metadata written next to each CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: ExperimentSpec,
    pub config_hash: String,
    pub version: String,
    pub created: String,
    /// Anything else worth keeping with the run: fits, check outcomes, caps.
    pub notes: Map<String, Value>,
}

impl Sidecar {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            config_hash: spec.config_hash()?,
            version: crate::harness::VERSION.to_string(),
            created: chrono::Utc::now().to_rfc3339(),
            notes: Map::new(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
