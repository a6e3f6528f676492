//! Command-line driver behind the `magres` binary.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric or
//! task failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{resolve_parameter, with_parameter, Config};
use crate::device::{characterize_transfer, NeuronNoise, TransferTable};
use crate::error::{Error, Result};
use crate::manifest::{spec_hash, RunManifest};
use crate::numfmt::{fmt_sig, round_sig};
use crate::rng::{derive_seed, streams, RngState};
use crate::tasks::experiment::{iqr, median, run_experiment, ExperimentSpec, MetricsSummary, Report, Task};

pub const SEED_ENV: &str = "MAGRES_SEED";

#[derive(Debug, Parser)]
#[command(name = "magres", version, about = "Magnetic-neuron reservoir computing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo sweep of the analog neuron transfer curve.
    Characterize(CommonArgs),
    /// Run the configured task for every network size and seed.
    Run(CommonArgs),
    /// Run the configured task once per value of one numeric parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Top-level seed; overrides the config. Falls back to the config, then MAGRES_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "magres-out")]
    pub out: PathBuf,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Report format (default: json for run, csv for characterize and sweep).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Parameter to vary, e.g. `n_nodes` or `reservoir.leak`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Aggregated metric (default: NRMSE at the longest horizon, or srr).
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Characterize(a) => cmd_characterize(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("magres: {e}");
            e.exit_code()
        }
    }
}

/// Flag, then config, then environment, then 0.
pub fn resolve_seed(flag: Option<u64>, config: &Config) -> Result<u64> {
    if let Some(s) = flag.or(config.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Seeds of the repeats: the top-level seed first, then derived ones.
pub fn repeat_seeds(seed: u64, repeats: usize) -> Vec<u64> {
    (0..repeats)
        .map(|i| if i == 0 { seed } else { derive_seed(seed, i as u64) })
        .collect()
}

struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Outputs {
    fn create(dir: &Path, command: &str, canonical: &str, seed: u64, started: Instant) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(command, canonical, seed),
            started,
        })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(rel.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.wall_time_s = round_sig(self.started.elapsed().as_secs_f64());
        self.manifest.write(&self.dir)
    }
}

fn thread_pool(jobs: Option<u64>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0) as usize)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_characterize(args: &CommonArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Config::load(&args.config)?;
    let seed = resolve_seed(args.seed, &config)?;
    config.seed = Some(seed);
    let sweep = &config.characterize;
    let mut noise = NeuronNoise::new(
        config.device.noise_process,
        RngState::with_stream(seed, streams::NEURON),
    );
    let table = characterize_transfer(
        &config.device,
        sweep.v_min,
        sweep.v_max,
        sweep.n_points,
        sweep.samples_per_point,
        &mut noise,
    )?;

    let mut out = Outputs::create(&args.out, "characterize", &config.to_toml(), seed, started)?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => out.write("transfer.csv", &table.to_csv())?,
        Format::Json => out.write("transfer.json", &json_text(&transfer_json(&table)))?,
    }
    out.finish()
}

fn transfer_json(table: &TransferTable) -> serde_json::Value {
    let points: Vec<_> = table
        .points
        .iter()
        .map(|p| {
            serde_json::json!({
                "v_in": round_sig(p.v_in),
                "mean": round_sig(p.mean),
                "min": round_sig(p.min),
                "max": round_sig(p.max),
            })
        })
        .collect();
    serde_json::json!({ "points": points })
}

/// Aggregate of one metric over the seeds of a block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub median: f64,
    pub iqr: f64,
}

/// All runs for one network size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeBlock {
    pub n_nodes: usize,
    pub aggregate: Vec<MetricAggregate>,
    pub runs: Vec<MetricsSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub task: &'static str,
    pub seed: u64,
    pub spec_hash: String,
    pub toolkit_version: &'static str,
    pub blocks: Vec<NodeBlock>,
}

/// Named scalar metrics of one run, in a fixed order.
pub fn metric_values(s: &MetricsSummary) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if s.task == Task::MackeyGlass.name() {
        for h in &s.nrmse {
            out.push((format!("nrmse@{}", h.horizon), h.nrmse));
        }
    } else if let Some(h) = s.nrmse.first() {
        out.push(("nrmse".to_string(), h.nrmse));
    }
    for (name, v) in [
        ("srr", s.srr),
        ("srr_l1", s.srr_l1),
        ("ber", s.bit_error_rate),
        ("train_nrmse", s.train_nrmse),
    ] {
        if let Some(v) = v {
            out.push((name.to_string(), v));
        }
    }
    out
}

/// Metric names a spec produces; the first is the sweep default.
pub fn metric_names(spec: &ExperimentSpec) -> Vec<String> {
    match spec.task {
        Task::MackeyGlass => {
            let mut hs = spec.mg.horizons.clone();
            hs.sort_unstable();
            hs.dedup();
            let mut names: Vec<String> = hs.iter().rev().map(|h| format!("nrmse@{h}")).collect();
            names.push("train_nrmse".into());
            names
        }
        Task::Equalization => ["srr", "srr_l1", "ber", "nrmse"].map(String::from).to_vec(),
    }
}

fn aggregate(runs: &[MetricsSummary]) -> Vec<MetricAggregate> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    metric_values(first)
        .into_iter()
        .enumerate()
        .map(|(i, (metric, _))| {
            let vals: Vec<f64> = runs.iter().map(|r| metric_values(r)[i].1).collect();
            MetricAggregate {
                metric,
                median: round_sig(median(&vals)),
                iqr: round_sig(iqr(&vals)),
            }
        })
        .collect()
}

fn run_seeds(spec: &ExperimentSpec, seeds: &[u64]) -> Result<Vec<Report>> {
    seeds
        .par_iter()
        .map(|&s| {
            run_experiment(&ExperimentSpec {
                seed: s,
                ..spec.clone()
            })
        })
        .collect()
}

fn runs_csv(blocks: &[NodeBlock]) -> String {
    let mut out = String::from("task,n_nodes,seed,metric,value\n");
    for b in blocks {
        for r in &b.runs {
            for (name, v) in metric_values(r) {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.task,
                    r.n_nodes,
                    r.seed,
                    name,
                    fmt_sig(v)
                ));
            }
        }
    }
    out
}

fn trace_name(n_nodes: usize, seed: u64) -> String {
    format!("traces/n{n_nodes}_seed{seed}.csv")
}

pub fn cmd_run(args: &CommonArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Config::load(&args.config)?;
    let seed = resolve_seed(args.seed, &config)?;
    config.seed = Some(seed);
    let mut spec = config.require_experiment()?.clone();
    spec.seed = seed;
    config.experiment = Some(spec.clone());
    let ladder = config
        .run
        .n_nodes
        .clone()
        .unwrap_or_else(|| vec![spec.reservoir.n_nodes]);
    let seeds = repeat_seeds(seed, config.run.repeats);
    let mut specs = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let mut s = spec.clone();
        s.reservoir.n_nodes = n;
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
        specs.push(s);
    }

    let canonical = config.to_toml();
    let reports: Vec<Vec<Report>> =
        thread_pool(args.jobs)?.install(|| specs.par_iter().map(|s| run_seeds(s, &seeds)).collect::<Result<_>>())?;

    let mut out = Outputs::create(&args.out, "run", &canonical, seed, started)?;
    let mut blocks = Vec::with_capacity(ladder.len());
    for (n, runs) in ladder.iter().zip(&reports) {
        let summaries: Vec<MetricsSummary> = runs.iter().map(Report::summary).collect();
        for r in runs {
            let s = r.summary();
            out.write(&trace_name(s.n_nodes, s.seed), &r.traces_csv())?;
        }
        blocks.push(NodeBlock {
            n_nodes: *n,
            aggregate: aggregate(&summaries),
            runs: summaries,
        });
    }
    let report = RunReport {
        task: spec.task.name(),
        seed,
        spec_hash: spec_hash(&canonical),
        toolkit_version: crate::VERSION,
        blocks,
    };
    match args.format.unwrap_or(Format::Json) {
        Format::Json => out.write("report.json", &json_text(&report))?,
        Format::Csv => out.write("report.csv", &runs_csv(&report.blocks))?,
    }
    out.finish()
}

/// One aggregate row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub metric: String,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Serialize)]
struct SweepSpec<'a> {
    parameter: &'a str,
    values: &'a [f64],
    metric: &'a str,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let started = Instant::now();
    let common = &args.common;
    let mut config = Config::load(&common.config)?;
    let seed = resolve_seed(common.seed, &config)?;
    config.seed = Some(seed);
    let mut spec = config.require_experiment()?.clone();
    spec.seed = seed;
    config.experiment = Some(spec.clone());
    let path = resolve_parameter(&spec, &args.param)?;
    let names = metric_names(&spec);
    let metric = match &args.metric {
        Some(m) if names.contains(m) => m.clone(),
        Some(m) => {
            return Err(Error::Config(format!(
                "unknown metric `{m}`; available: {}",
                names.join(", ")
            )))
        }
        None => names[0].clone(),
    };
    let specs: Vec<ExperimentSpec> = args
        .values
        .iter()
        .map(|&v| with_parameter(&spec, &path, v))
        .collect::<Result<_>>()?;
    let seeds = repeat_seeds(seed, config.run.repeats);

    let sweep_toml = toml::to_string(&SweepSpec {
        parameter: &path.join("."),
        values: &args.values,
        metric: &metric,
    })
    .expect("sweep spec serializes");
    let canonical = format!("{}\n[sweep]\n{}", config.to_toml(), sweep_toml);

    let reports: Vec<Vec<Report>> =
        thread_pool(common.jobs)?.install(|| specs.par_iter().map(|s| run_seeds(s, &seeds)).collect::<Result<_>>())?;

    let mut out = Outputs::create(&common.out, "sweep", &canonical, seed, started)?;
    let mut rows = Vec::with_capacity(specs.len());
    for (&value, runs) in args.values.iter().zip(&reports) {
        let summaries: Vec<MetricsSummary> = runs.iter().map(Report::summary).collect();
        let job_dir = format!("jobs/{}={}", path.join("."), fmt_sig(value));
        for r in runs {
            let s = r.summary();
            out.write(&format!("{job_dir}/{}", trace_name(s.n_nodes, s.seed)), &r.traces_csv())?;
        }
        let block = NodeBlock {
            n_nodes: summaries.first().map_or(0, |s| s.n_nodes),
            aggregate: aggregate(&summaries),
            runs: summaries,
        };
        let agg = block
            .aggregate
            .iter()
            .find(|a| a.metric == metric)
            .ok_or_else(|| Error::Config(format!("metric `{metric}` missing from results")))?;
        rows.push(SweepRow {
            value,
            metric: metric.clone(),
            median: agg.median,
            iqr: agg.iqr,
        });
        out.write(&format!("{job_dir}/report.json"), &json_text(&block))?;
    }

    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = String::from("value,metric,median,iqr\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_sig(r.value),
                    r.metric,
                    fmt_sig(r.median),
                    fmt_sig(r.iqr)
                ));
            }
            out.write("sweep.csv", &csv)?;
        }
        Format::Json => out.write("sweep.json", &json_text(&rows))?,
    }
    out.finish()
}
