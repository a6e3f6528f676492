//! TOML experiment configuration.
//!
//! ```toml
//! task = "equalization"      # or "mackey_glass"
//! seed = 42
//! train_len = 3000
//! test_len = 2000
//!
//! [reservoir]                # any subset of fields
//! n_nodes = 20
//!
//! [channel]
//! fir_taps = [1.0, 0.25, -0.1]
//!
//! [run]
//! n_nodes = [10, 50, 200]    # optional network-size ladder
//! repeats = 10               # seeds per point
//!
//! [device]                   # `characterize` only
//! alpha0 = 0.05
//!
//! [characterize]
//! n_points = 41
//! ```
//!
//! Fields left out take the task's defaults, so a partial `[reservoir]`
//! section only overrides what it names.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::device::NeuronParams;
use crate::error::{Error, Result};
use crate::reservoir::ReservoirConfig;
use crate::tasks::experiment::{ExperimentSpec, Task};

const DEFAULT_NODES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    /// Network sizes to run; `reservoir.n_nodes` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<Vec<usize>>,
    pub repeats: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n_nodes: None,
            repeats: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub v_min: f64,
    pub v_max: f64,
    pub n_points: usize,
    pub samples_per_point: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        // beta * v_in spans [-3, 3] at the default beta of 20 V^-1
        Self {
            v_min: -0.15,
            v_max: 0.15,
            n_points: 41,
            samples_per_point: 10_000,
        }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_min.is_finite() && self.v_max.is_finite() && self.v_min < self.v_max) {
            return Err(Error::Config(format!(
                "characterize: need v_min < v_max, got [{}, {}]",
                self.v_min, self.v_max
            )));
        }
        if self.n_points < 2 || self.samples_per_point == 0 {
            return Err(Error::Config(
                "characterize: need n_points >= 2 and samples_per_point >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment: Option<ExperimentSpec>,
    pub seed: Option<u64>,
    pub run: RunOptions,
    pub device: NeuronParams,
    pub characterize: SweepOptions,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        let run = take_section::<RunOptions>(&mut table, "run", RunOptions::default())?;
        let device = take_section::<NeuronParams>(&mut table, "device", NeuronParams::default())?;
        let characterize = take_section::<SweepOptions>(&mut table, "characterize", SweepOptions::default())?;
        device.validate().map_err(config_err)?;
        characterize.validate()?;
        if run.repeats == 0 {
            return Err(Error::Config("run.repeats must be >= 1".into()));
        }

        let seed = match table.get("seed") {
            None => None,
            Some(Value::Integer(s)) if *s >= 0 => Some(*s as u64),
            Some(other) => {
                return Err(Error::Config(format!(
                    "seed must be a non-negative integer, got {other}"
                )))
            }
        };
        let experiment = if table.contains_key("task") {
            let spec = experiment_from_table(table)?;
            spec.validate().map_err(config_err)?;
            Some(spec)
        } else {
            if let Some(key) = table.keys().find(|k| k.as_str() != "seed") {
                return Err(Error::Config(format!(
                    "unknown key `{key}` (experiment configs need `task`)"
                )));
            }
            None
        };
        Ok(Self {
            experiment,
            seed,
            run,
            device,
            characterize,
        })
    }

    /// Canonical TOML text; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        let mut table = match &self.experiment {
            Some(spec) => to_table(spec),
            None => Table::new(),
        };
        match self.seed {
            Some(seed) => {
                table.insert("seed".into(), Value::Integer(seed as i64));
            }
            None => {
                table.remove("seed");
            }
        }
        table.insert("run".into(), Value::Table(to_table(&self.run)));
        table.insert("device".into(), Value::Table(to_table(&self.device)));
        table.insert("characterize".into(), Value::Table(to_table(&self.characterize)));
        toml::to_string(&table).expect("config serializes")
    }

    pub fn require_experiment(&self) -> Result<&ExperimentSpec> {
        self.experiment
            .as_ref()
            .ok_or_else(|| Error::Config("config declares no `task`".into()))
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn to_table<T: Serialize>(value: &T) -> Table {
    match Value::try_from(value).expect("serializable") {
        Value::Table(t) => t,
        _ => unreachable!("structs serialize to tables"),
    }
}

fn take_section<T: Serialize + for<'de> Deserialize<'de>>(table: &mut Table, name: &str, default: T) -> Result<T> {
    match table.remove(name) {
        None => Ok(default),
        Some(Value::Table(user)) => {
            let mut merged = to_table(&default);
            merge(&mut merged, user);
            Value::Table(merged)
                .try_into()
                .map_err(|e| Error::Config(format!("[{name}]: {e}")))
        }
        Some(_) => Err(Error::Config(format!("`{name}` must be a table"))),
    }
}

/// Default spec for a task; the ladder and seed are applied by the caller.
pub fn task_defaults(task: Task) -> ExperimentSpec {
    match task {
        Task::MackeyGlass => ExperimentSpec::mackey_glass_default(DEFAULT_NODES, 0),
        Task::Equalization => ExperimentSpec::equalization_default(DEFAULT_NODES, 0),
    }
}

/// Builds a spec from a user table layered over the task's defaults.
pub fn experiment_from_table(user: Table) -> Result<ExperimentSpec> {
    let task: Task = user
        .get("task")
        .cloned()
        .ok_or_else(|| Error::Config("missing `task`".into()))?
        .try_into()
        .map_err(|e| Error::Config(format!("task: {e}")))?;
    let mut merged = to_table(&task_defaults(task));
    merge(&mut merged, user);
    Value::Table(merged)
        .try_into()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Parses a bare reservoir table (`n_nodes = 50`, ...) over the defaults.
pub fn reservoir_from_toml(text: &str) -> Result<ReservoirConfig> {
    let cfg: ReservoirConfig = toml::from_str(text).map_err(|e| Error::Config(format!("reservoir: {e}")))?;
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

pub fn experiment_to_table(spec: &ExperimentSpec) -> Table {
    to_table(spec)
}

/// Recursive table merge; `over` wins on conflicts.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sections searched, in order, for an undotted parameter name.
const SECTIONS: [&str; 6] = ["reservoir", "ridge", "mackey_glass", "mg", "channel", "equalizer"];

/// Resolves a parameter name (`n_nodes` or `reservoir.n_nodes`) to its dotted path.
pub fn resolve_parameter(spec: &ExperimentSpec, name: &str) -> Result<Vec<String>> {
    let table = to_table(spec);
    let path: Vec<String> = if name.contains('.') {
        name.split('.').map(str::to_string).collect()
    } else if table.contains_key(name) {
        vec![name.to_string()]
    } else {
        let hits: Vec<&str> = SECTIONS
            .iter()
            .copied()
            .filter(|s| {
                table
                    .get(*s)
                    .and_then(Value::as_table)
                    .is_some_and(|t| t.contains_key(name))
            })
            .collect();
        match hits.as_slice() {
            [one] => vec![one.to_string(), name.to_string()],
            [] => return Err(Error::Config(format!("unknown parameter `{name}`"))),
            many => {
                return Err(Error::Config(format!(
                    "ambiguous parameter `{name}`; qualify it as one of {}",
                    many.iter()
                        .map(|s| format!("{s}.{name}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                )))
            }
        }
    };
    let mut cursor = &Value::Table(table);
    for key in &path {
        cursor = cursor
            .as_table()
            .and_then(|t| t.get(key))
            .ok_or_else(|| Error::Config(format!("unknown parameter `{name}`")))?;
    }
    if !matches!(cursor, Value::Integer(_) | Value::Float(_)) {
        return Err(Error::Config(format!("parameter `{name}` is not numeric")));
    }
    Ok(path)
}

/// Returns a copy of `spec` with the numeric field at `path` set to `value`.
pub fn with_parameter(spec: &ExperimentSpec, path: &[String], value: f64) -> Result<ExperimentSpec> {
    let mut table = to_table(spec);
    let (last, parents) = path
        .split_last()
        .ok_or_else(|| Error::Config("empty parameter path".into()))?;
    let mut cursor = &mut table;
    for key in parents {
        cursor = cursor
            .get_mut(key)
            .and_then(Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("unknown section `{key}`")))?;
    }
    let slot = cursor
        .get_mut(last)
        .ok_or_else(|| Error::Config(format!("unknown parameter `{last}`")))?;
    *slot = match slot {
        Value::Integer(_) => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Config(format!(
                    "`{last}` needs a non-negative integer, got {value}"
                )));
            }
            Value::Integer(value as i64)
        }
        Value::Float(_) => Value::Float(value),
        _ => return Err(Error::Config(format!("parameter `{last}` is not numeric"))),
    };
    let spec: ExperimentSpec = Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(e.to_string()))?;
    spec.validate().map_err(config_err)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_task_defaults() {
        let c = Config::parse("task = \"equalization\"\nseed = 3\n[reservoir]\nn_nodes = 20\n").unwrap();
        let spec = c.experiment.unwrap();
        assert_eq!(spec.reservoir.n_nodes, 20);
        assert_eq!(spec.reservoir.leak, 0.8);
        assert_eq!(spec.seed, 3);
        assert_eq!(c.seed, Some(3));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        for bad in [
            "task = \"equalization\"\n[reservoir]\nnodes = 3\n",
            "task = \"teleport\"\n",
            "bogus = 1\n",
            "task = \"mackey_glass\"\n[run]\nrepeats = 0\n",
            "task = \"mackey_glass\"\n[reservoir]\nleak = 2.0\n",
            "[device]\nbeta = -1.0\n",
            "[characterize]\nv_min = 1.0\nv_max = -1.0\n",
            "this is not toml",
        ] {
            let e = Config::parse(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = "task = \"mackey_glass\"\nseed = 9\n[run]\nn_nodes = [10, 50]\nrepeats = 3\n[device]\nalpha0 = 0.01\n[device.noise_process]\nkind = \"correlated\"\ncorrelation_time = 4.0\n";
        let a = Config::parse(text).unwrap();
        let once = a.to_toml();
        let b = Config::parse(&once).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_toml(), once);
    }

    #[test]
    fn device_only_config() {
        let c = Config::parse("seed = 4\n[characterize]\nn_points = 5\n").unwrap();
        assert!(c.experiment.is_none());
        assert_eq!(c.characterize.n_points, 5);
        assert_eq!(c.seed, Some(4));
        assert!(c.require_experiment().is_err());
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn bare_reservoir_table() {
        let cfg = reservoir_from_toml("n_nodes = 12\nleak = 0.5\n").unwrap();
        assert_eq!(
            (cfg.n_nodes, cfg.leak, cfg.gain),
            (12, 0.5, ReservoirConfig::default().gain)
        );
        assert_eq!(reservoir_from_toml("n_nodes = 0\n").unwrap_err().exit_code(), 2);
        assert_eq!(reservoir_from_toml("nodes = 3\n").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn parameter_resolution() {
        let spec = task_defaults(Task::MackeyGlass);
        assert_eq!(
            resolve_parameter(&spec, "n_nodes").unwrap(),
            vec!["reservoir", "n_nodes"]
        );
        assert_eq!(resolve_parameter(&spec, "train_len").unwrap(), vec!["train_len"]);
        assert_eq!(
            resolve_parameter(&spec, "mackey_glass.tau_delay").unwrap(),
            vec!["mackey_glass", "tau_delay"]
        );
        // noise_amp lives in both reservoir and channel
        assert!(resolve_parameter(&spec, "noise_amp").is_err());
        assert!(resolve_parameter(&spec, "warp_factor").is_err());
        assert!(resolve_parameter(&spec, "task").is_err());

        let path = resolve_parameter(&spec, "n_nodes").unwrap();
        assert_eq!(with_parameter(&spec, &path, 50.0).unwrap().reservoir.n_nodes, 50);
        assert!(with_parameter(&spec, &path, 2.5).is_err());
        let path = resolve_parameter(&spec, "leak").unwrap();
        assert_eq!(with_parameter(&spec, &path, 0.5).unwrap().reservoir.leak, 0.5);
        assert!(with_parameter(&spec, &path, 1.5).is_err());
    }
}
