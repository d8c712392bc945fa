//! `sim`: command-line front end for the Monte-Carlo experiments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use maxreward::harness::{self, Baseline, Check, ExperimentFamily, ExperimentSpec, RunOutput, Sidecar};
use maxreward::oracle;
use maxreward::planning::PlanDump;

const EXIT_CONFIG: u8 = 1;
const EXIT_ASSERT: u8 = 2;

#[derive(Parser)]
#[command(name = "sim", version = harness::VERSION, about = "Maximum-reward motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean optimal reward on the lattice versus path length (or shape function along the diagonal).
    LatticeMeanReward(ExperimentArgs),
    /// Distance travelled under limited lattice sensing before falling behind the optimum.
    LatticeSensing(ExperimentArgs),
    /// Mean optimal reward on a Poisson field versus travel distance.
    ContMeanReward(ExperimentArgs),
    /// Distance travelled under limited continuous sensing before falling behind the optimum.
    ContSensing(ExperimentArgs),
    /// Mean optimal reward versus agility.
    Agility(ExperimentArgs),
    /// Planning and inference workload of the receding-horizon planner.
    Workload(ExperimentArgs),
    /// Homogeneous versus randomized sensor precision.
    Ugs(ExperimentArgs),
    /// Compare every fast solver with its brute-force reference.
    OracleCheck(OracleArgs),
    /// Re-run one trial from a plan dump and compare.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with experiment settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a setting, `key=value`; applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV, sidecar and dump files.
    #[arg(long, env = "SIM_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Explicit CSV path; the sidecar goes next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Exit with status 2 when an acceptance check fails.
    #[arg(long = "assert")]
    assert_checks: bool,
    /// Reward law, e.g. `exponential:rate=1` or `pareto:xm=1,alpha=1.5`.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Mission length for agility, workload and ugs runs.
    #[arg(long)]
    length: Option<f64>,
    /// Sensing range for workload runs that sweep alpha.
    #[arg(long)]
    sensing: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Stopping baseline: auto, empirical, fixed:<value> or scaled:<exponent>.
    #[arg(long)]
    baseline: Option<Baseline>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    max_distance: Option<f64>,
    #[arg(long)]
    mean_precision: Option<f64>,
    #[arg(long)]
    prior_precision: Option<f64>,
    /// Write one plan per trial as JSON lines.
    #[arg(long)]
    dump_plans: bool,
    /// Sweep path sizes n.
    #[arg(long, value_delimiter = ',')]
    n: Vec<f64>,
    /// Sweep diagonal vertices (k, k).
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64>,
    /// Sweep lattice sensing ranges m.
    #[arg(long, value_delimiter = ',')]
    m: Vec<f64>,
    /// Sweep travel distances L.
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<f64>,
    /// Sweep continuous sensing ranges S.
    #[arg(long = "sensing-ranges", value_delimiter = ',')]
    sensing_ranges: Vec<f64>,
    /// Sweep agilities.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Suppress progress output.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Plan dump written with --dump-plans.
    dump: PathBuf,
    /// Zero-based line of the dump to replay.
    #[arg(long, default_value_t = 0)]
    line: usize,
    /// Write the regenerated field as CSV.
    #[arg(long)]
    field_out: Option<PathBuf>,
    /// Exit with status 2 when the replay differs from the dump.
    #[arg(long = "assert")]
    assert_checks: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(status);
        }
    };
    match dispatch(cli.command) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    let (family, args) = match command {
        Command::LatticeMeanReward(a) => (ExperimentFamily::LatticeMeanReward, a),
        Command::LatticeSensing(a) => (ExperimentFamily::LatticeSensing, a),
        Command::ContMeanReward(a) => (ExperimentFamily::ContinuousMeanReward, a),
        Command::ContSensing(a) => (ExperimentFamily::ContinuousSensing, a),
        Command::Agility(a) => (ExperimentFamily::Agility, a),
        Command::Workload(a) => (ExperimentFamily::Workload, a),
        Command::Ugs(a) => (ExperimentFamily::Ugs, a),
        Command::OracleCheck(a) => return oracle_check(&a),
        Command::Replay(a) => return replay(&a),
    };
    experiment(family, args)
}

fn effective_spec(family: ExperimentFamily, args: &ExperimentArgs) -> anyhow::Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::preset(family);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        spec.merge_toml(&text).with_context(|| format!("in config {}", path.display()))?;
        if spec.family != family {
            bail!("config is for family {} but the subcommand runs {family}", spec.family);
        }
    }
    for o in &args.overrides {
        spec.apply_override(o)?;
    }
    if let Some(d) = &args.dist {
        d.parse::<maxreward::RewardDistribution>()?;
        spec.dist = d.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field { spec.$field = v; }
        )*};
    }
    take!(
        seed,
        trials,
        lambda,
        alpha,
        length,
        sensing,
        delta,
        baseline,
        max_steps,
        max_distance,
        mean_precision,
        prior_precision
    );
    if args.dump_plans {
        spec.dump_plans = true;
    }
    if args.output.is_some() {
        spec.output = args.output.clone();
    }
    let sweeps = [
        ("n", &args.n),
        ("k", &args.k),
        ("m", &args.m),
        ("L", &args.lengths),
        ("S", &args.sensing_ranges),
        ("alpha", &args.alphas),
    ];
    let given: Vec<_> = sweeps.iter().filter(|(_, v)| !v.is_empty()).collect();
    match given.as_slice() {
        [] => {}
        [(name, values)] => {
            spec.sweep.name = name.to_string();
            spec.sweep.values = values.to_vec();
        }
        _ => bail!("give at most one sweep flag"),
    }
    spec.validate()?;
    Ok(spec)
}

fn experiment(family: ExperimentFamily, args: ExperimentArgs) -> anyhow::Result<u8> {
    let spec = effective_spec(family, &args)?;
    if let Some(k) = args.parallelism {
        rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global().context("cannot size the worker pool")?;
    }
    let hash = spec.config_hash()?;
    let csv_path = match &spec.output {
        Some(p) => p.clone(),
        None => args.out_dir.join(format!("{}-{}.csv", family.name(), &hash[..12])),
    };
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let quiet = args.quiet;
    if !quiet {
        eprintln!("{family}: {} sweep points x {} trials, seed {}", spec.sweep.values.len(), spec.trials, spec.seed);
    }
    let output = harness::run_full(&spec, &mut |p| {
        if !quiet {
            eprintln!("  [{}/{}] {} = {} done", p.done, p.total, spec.sweep.name, p.sweep_value);
        }
    })?;
    write_outputs(&spec, &output, &csv_path)?;
    let checks = harness::checks(&spec, &output)?;
    let mut sidecar = Sidecar::new(&spec)?;
    sidecar.notes.insert("checks".into(), serde_json::to_value(&checks)?);
    sidecar.notes.insert("csv".into(), json!(csv_path.file_name().map(|f| f.to_string_lossy())));
    sidecar.write(&csv_path.with_extension("json"))?;
    report_checks(&checks, quiet);
    if !quiet {
        eprintln!("wrote {}", csv_path.display());
    }
    let failed = checks.iter().any(|c| !c.passed);
    Ok(if args.assert_checks && failed { EXIT_ASSERT } else { 0 })
}

fn with_suffix(csv_path: &Path, suffix: &str) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_outputs(spec: &ExperimentSpec, output: &RunOutput, csv_path: &Path) -> anyhow::Result<()> {
    let file = File::create(csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    harness::write_csv(&output.records, BufWriter::new(file))?;
    if !output.ugs.is_empty() {
        let path = with_suffix(csv_path, "checkpoints.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        for (i, cmp) in output.ugs.iter().enumerate() {
            let mut buf = Vec::new();
            cmp.write_csv(&mut buf)?;
            // one header for the whole file
            let text = String::from_utf8(buf)?;
            let body = if i == 0 { text.as_str() } else { text.split_once('\n').map_or("", |x| x.1) };
            w.write_all(body.as_bytes())?;
        }
        w.flush()?;
    }
    if spec.dump_plans {
        let path = with_suffix(csv_path, "plans.jsonl");
        let mut w = BufWriter::new(File::create(&path)?);
        for d in &output.dumps {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn report_checks(checks: &[Check], quiet: bool) {
    for c in checks {
        if !quiet || !c.passed {
            eprintln!("  check {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
}

fn oracle_check(args: &OracleArgs) -> anyhow::Result<u8> {
    let suites = [
        oracle::lattice_suite(args.cases, args.seed),
        oracle::continuous_suite(args.cases, args.seed),
        oracle::bayes_suite(args.cases.min(100), args.seed),
    ];
    let mut failed = false;
    for s in &suites {
        println!("{}: {}/{} cases agree", s.name, s.cases - s.failures, s.cases);
        if let Some(f) = &s.first_failure {
            println!("  first mismatch: {f}");
        }
        failed |= !s.passed();
    }
    Ok(if failed { EXIT_ASSERT } else { 0 })
}

fn replay(args: &ReplayArgs) -> anyhow::Result<u8> {
    let file = File::open(&args.dump).with_context(|| format!("cannot read {}", args.dump.display()))?;
    let Some(line) = BufReader::new(file).lines().nth(args.line) else {
        bail!("{} has no line {}", args.dump.display(), args.line);
    };
    let dump: PlanDump = serde_json::from_str(&line?).context("malformed plan dump line")?;
    let outcome = harness::replay(&dump)?;
    println!(
        "recorded reward {} replayed reward {} visits {} -> {}",
        outcome.recorded_reward,
        outcome.replayed_reward,
        dump.visited.len(),
        if outcome.matches { "match" } else { "MISMATCH" }
    );
    if let Some(path) = &args.field_out {
        outcome.field.write_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(if !outcome.matches && args.assert_checks { EXIT_ASSERT } else { 0 })
}
