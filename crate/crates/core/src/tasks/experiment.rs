//! End-to-end experiments: Mackey-Glass generative prediction and nonlinear
//! channel equalization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::{fmt_sig, round_sig};
use crate::reservoir::{init_topology, run_free, run_teacher_forced, ReservoirConfig};
use crate::rng::{streams, RngState};
use crate::tasks::channel::{channel_apply, gen_symbols, ChannelParams};
use crate::tasks::mackey_glass::{mackey_glass, MGParams};
use crate::training::{bit_error_rate, nrmse, srr, train_readout, RidgeConfig, SrrNorm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    MackeyGlass,
    Equalization,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::MackeyGlass => "mackey_glass",
            Task::Equalization => "equalization",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MgOptions {
    /// Samples discarded from the start of the series (integrator transient).
    pub transient: usize,
    /// Free-run windows, in steps, over which NRMSE is reported.
    pub horizons: Vec<usize>,
    /// Target range of the affine rescaling applied before training.
    pub scale_to: f64,
}

impl Default for MgOptions {
    fn default() -> Self {
        Self {
            transient: 1000,
            horizons: vec![50, 100, 200],
            scale_to: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EqualizerOptions {
    /// The readout at tick `t` estimates `d(t - delay)`.
    pub delay: usize,
    pub symbol_levels: usize,
    pub srr_norm: SrrNorm,
}

impl Default for EqualizerOptions {
    fn default() -> Self {
        Self {
            delay: 0,
            symbol_levels: 2,
            srr_norm: SrrNorm::L2,
        }
    }
}

/// Complete, seedable description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: Task,
    pub seed: u64,
    pub train_len: usize,
    pub test_len: usize,
    /// Output-to-reservoir feedback; defaults to on for Mackey-Glass, off for equalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<bool>,
    #[serde(default)]
    pub reservoir: ReservoirConfig,
    #[serde(default)]
    pub ridge: RidgeConfig,
    #[serde(default)]
    pub mackey_glass: MGParams,
    #[serde(default)]
    pub mg: MgOptions,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub equalizer: EqualizerOptions,
}

impl ExperimentSpec {
    pub fn mackey_glass_default(n_nodes: usize, seed: u64) -> Self {
        Self {
            task: Task::MackeyGlass,
            seed,
            train_len: 2000,
            test_len: 500,
            feedback: None,
            reservoir: ReservoirConfig {
                n_nodes,
                n_inputs: 0,
                ..ReservoirConfig::default()
            },
            ridge: RidgeConfig::default(),
            mackey_glass: MGParams::default(),
            mg: MgOptions::default(),
            channel: ChannelParams::default(),
            equalizer: EqualizerOptions::default(),
        }
    }

    pub fn equalization_default(n_nodes: usize, seed: u64) -> Self {
        Self {
            task: Task::Equalization,
            seed,
            train_len: 3000,
            test_len: 2000,
            feedback: None,
            reservoir: ReservoirConfig {
                n_nodes,
                n_inputs: 1,
                leak: 0.8,
                gain: 0.8,
                input_scale: 2.0,
                spectral_radius: 0.5,
                ..ReservoirConfig::default()
            },
            ridge: RidgeConfig::default(),
            mackey_glass: MGParams::default(),
            mg: MgOptions::default(),
            channel: ChannelParams::default(),
            equalizer: EqualizerOptions::default(),
        }
    }

    pub fn feedback_enabled(&self) -> bool {
        self.feedback.unwrap_or(self.task == Task::MackeyGlass)
    }

    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        self.ridge.validate()?;
        if self.train_len <= self.reservoir.washout {
            return Err(Error::domain(format!(
                "train_len {} must exceed washout {}",
                self.train_len, self.reservoir.washout
            )));
        }
        if self.test_len == 0 {
            return Err(Error::domain("test_len must be > 0"));
        }
        match self.task {
            Task::MackeyGlass => self.mackey_glass.validate()?,
            Task::Equalization => {
                self.channel.validate()?;
                if self.equalizer.symbol_levels < 2 {
                    return Err(Error::domain("symbol_levels must be >= 2"));
                }
            }
        }
        Ok(())
    }

    /// Reservoir settings actually used: the experiment seed drives the topology
    /// and the output count is one.
    pub fn effective_reservoir(&self) -> ReservoirConfig {
        let n_inputs = match self.task {
            Task::MackeyGlass => self.reservoir.n_inputs,
            Task::Equalization => 1,
        };
        ReservoirConfig {
            seed: self.seed,
            n_outputs: 1,
            n_inputs,
            ..self.reservoir.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonNrmse {
    pub horizon: usize,
    pub nrmse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MgReport {
    pub seed: u64,
    pub n_nodes: usize,
    pub achieved_radius: f64,
    /// One-step-ahead NRMSE on the teacher-forced training data.
    pub train_nrmse: f64,
    pub horizons: Vec<HorizonNrmse>,
    pub truth: Vec<f64>,
    pub generated: Vec<f64>,
}

impl MgReport {
    pub fn nrmse_at(&self, horizon: usize) -> Option<f64> {
        self.horizons.iter().find(|h| h.horizon == horizon).map(|h| h.nrmse)
    }

    /// CSV `t,true,generated`.
    pub fn traces_csv(&self) -> String {
        let mut out = String::from("t,true,generated\n");
        for (t, (a, b)) in self.truth.iter().zip(&self.generated).enumerate() {
            out.push_str(&format!("{t},{},{}\n", fmt_sig(*a), fmt_sig(*b)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqReport {
    pub seed: u64,
    pub n_nodes: usize,
    pub achieved_radius: f64,
    pub srr: f64,
    pub srr_l1: f64,
    pub bit_error_rate: f64,
    /// Bit errors of the unequalized channel output.
    pub channel_bit_error_rate: f64,
    pub nrmse: f64,
    /// Test window, aligned so that `y[i]` estimates `d[i]`.
    pub d: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

impl EqReport {
    /// CSV `t,d,u,y`.
    pub fn traces_csv(&self) -> String {
        let mut out = String::from("t,d,u,y\n");
        for t in 0..self.d.len() {
            out.push_str(&format!(
                "{t},{},{},{}\n",
                fmt_sig(self.d[t]),
                fmt_sig(self.u[t]),
                fmt_sig(self.y[t])
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    MackeyGlass(MgReport),
    Equalization(EqReport),
}

/// Metrics block of the JSON summary; numbers carry at most 9 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub task: &'static str,
    pub seed: u64,
    pub n_nodes: usize,
    /// Mackey-Glass: NRMSE per free-run horizon. Equalization: single entry
    /// for the whole test window (horizon = test length).
    pub nrmse: Vec<HorizonNrmse>,
    pub srr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub srr_l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_nrmse: Option<f64>,
    pub achieved_radius: f64,
}

impl Report {
    pub fn summary(&self) -> MetricsSummary {
        let r = round_sig;
        match self {
            Report::MackeyGlass(m) => MetricsSummary {
                task: Task::MackeyGlass.name(),
                seed: m.seed,
                n_nodes: m.n_nodes,
                nrmse: m
                    .horizons
                    .iter()
                    .map(|h| HorizonNrmse {
                        horizon: h.horizon,
                        nrmse: r(h.nrmse),
                    })
                    .collect(),
                srr: None,
                srr_l1: None,
                bit_error_rate: None,
                train_nrmse: Some(r(m.train_nrmse)),
                achieved_radius: r(m.achieved_radius),
            },
            Report::Equalization(e) => MetricsSummary {
                task: Task::Equalization.name(),
                seed: e.seed,
                n_nodes: e.n_nodes,
                nrmse: vec![HorizonNrmse {
                    horizon: e.d.len(),
                    nrmse: r(e.nrmse),
                }],
                srr: Some(r(e.srr)),
                srr_l1: Some(r(e.srr_l1)),
                bit_error_rate: Some(r(e.bit_error_rate)),
                train_nrmse: None,
                achieved_radius: r(e.achieved_radius),
            },
        }
    }

    pub fn traces_csv(&self) -> String {
        match self {
            Report::MackeyGlass(m) => m.traces_csv(),
            Report::Equalization(e) => e.traces_csv(),
        }
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    match spec.task {
        Task::MackeyGlass => run_mg_experiment(spec).map(Report::MackeyGlass),
        Task::Equalization => run_equalization_experiment(spec).map(Report::Equalization),
    }
}

/// Trains the readout teacher-forced on the Mackey-Glass series, then lets
/// the reservoir generate the continuation from its own fed-back output.
pub fn run_mg_experiment(spec: &ExperimentSpec) -> Result<MgReport> {
    if spec.task != Task::MackeyGlass {
        return Err(Error::Config("run_mg_experiment needs task = mackey_glass".into()));
    }
    spec.validate()?;
    let cfg = spec.effective_reservoir();
    let total = spec.mg.transient + spec.train_len + spec.test_len;
    let series = mackey_glass(&spec.mackey_glass, total)?;
    let series = &series[spec.mg.transient..];
    let (train, test) = series.split_at(spec.train_len);

    // affine map of the training range onto [-scale_to, scale_to]
    let lo = train.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = train.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo || !(hi - lo).is_finite() {
        return Err(Error::ZeroVariance);
    }
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    let forward = |v: f64| spec.mg.scale_to * (v - mid) / half;
    let inverse = |v: f64| v * half / spec.mg.scale_to + mid;

    let mut topo = init_topology(&cfg)?;
    if !spec.feedback_enabled() {
        topo = topo.without_feedback();
    }
    let mut noise = RngState::with_stream(spec.seed, streams::RESERVOIR_NOISE);
    let k = cfg.n_inputs;
    // a constant unit input acts as a per-node bias when n_inputs > 0
    let inputs = DMatrix::from_element(spec.train_len, k, 1.0);
    let targets = DMatrix::from_iterator(spec.train_len, 1, train.iter().map(|v| forward(*v)));
    let trace = run_teacher_forced(&inputs, &targets, &topo, &cfg, &mut noise)?;
    let readout = train_readout(&trace, &targets, &spec.ridge)?;

    let fitted = readout.apply_trace(&trace);
    let kept = trace.len() - trace.washout;
    let train_nrmse = nrmse(
        &fitted.rows(trace.washout, kept).into_owned(),
        &targets.rows(trace.washout, kept).into_owned(),
    )?;

    let x_last: DVector<f64> = trace.state(trace.len() - 1);
    let ext = DMatrix::from_element(spec.test_len, k, 1.0);
    let free = run_free(&x_last, &readout, spec.test_len, &topo, &cfg, &mut noise, Some(&ext))?;
    let generated: Vec<f64> = free.outputs.column(0).iter().map(|v| inverse(*v)).collect();

    let mut horizons = Vec::new();
    for &h in &spec.mg.horizons {
        if h == 0 || h > spec.test_len {
            continue;
        }
        let truth = DMatrix::from_column_slice(h, 1, &test[..h]);
        let gen = DMatrix::from_column_slice(h, 1, &generated[..h]);
        horizons.push(HorizonNrmse {
            horizon: h,
            nrmse: nrmse(&gen, &truth)?,
        });
    }

    Ok(MgReport {
        seed: spec.seed,
        n_nodes: cfg.n_nodes,
        achieved_radius: topo.achieved_radius,
        train_nrmse,
        horizons,
        truth: test.to_vec(),
        generated,
    })
}

/// Drives the reservoir with the distorted channel output and trains the
/// readout to recover the delayed transmitted symbols.
pub fn run_equalization_experiment(spec: &ExperimentSpec) -> Result<EqReport> {
    if spec.task != Task::Equalization {
        return Err(Error::Config(
            "run_equalization_experiment needs task = equalization".into(),
        ));
    }
    spec.validate()?;
    let cfg = spec.effective_reservoir();
    let delay = spec.equalizer.delay;
    let total = spec.train_len + spec.test_len + delay;

    let mut sym_rng = RngState::with_stream(spec.seed, streams::SYMBOLS);
    let d = gen_symbols(total, spec.equalizer.symbol_levels, &mut sym_rng)?;
    let mut ch_rng = RngState::with_stream(spec.channel.seed.unwrap_or(spec.seed), streams::CHANNEL_NOISE);
    let u = channel_apply(&d, &spec.channel, &mut ch_rng)?;

    let mut topo = init_topology(&cfg)?;
    if !spec.feedback_enabled() {
        topo = topo.without_feedback();
    }
    let mut noise = RngState::with_stream(spec.seed, streams::RESERVOIR_NOISE);
    // tick t estimates d(t - delay); earlier ticks have no target
    let target_at = |t: usize| if t >= delay { d[t - delay] } else { 0.0 };
    let inputs = DMatrix::from_column_slice(total, 1, &u);
    let targets = DMatrix::from_fn(total, 1, |t, _| target_at(t));
    let trace = run_teacher_forced(&inputs, &targets, &topo, &cfg, &mut noise)?;

    let train_end = spec.train_len + delay;
    let mut train_trace = trace.clone();
    train_trace.states = trace.states.rows(0, train_end).into_owned();
    train_trace.inputs = trace.inputs.rows(0, train_end).into_owned();
    train_trace.outputs = trace.outputs.rows(0, train_end).into_owned();
    train_trace.washout = cfg.washout.max(delay);
    let readout = train_readout(&train_trace, &targets.rows(0, train_end).into_owned(), &spec.ridge)?;

    let predicted = readout.apply_trace(&trace);
    let window = train_end..total;
    let y: Vec<f64> = window.clone().map(|t| predicted[(t, 0)]).collect();
    let d_win: Vec<f64> = window.clone().map(|t| d[t - delay]).collect();
    let u_win: Vec<f64> = window.map(|t| u[t - delay]).collect();

    let srr_main = srr(&y, &d_win, &u_win, spec.equalizer.srr_norm)?;
    let srr_l1 = srr(&y, &d_win, &u_win, SrrNorm::L1)?;
    let ber = bit_error_rate(&y, &d_win)?;
    let channel_ber = bit_error_rate(&u_win, &d_win)?;
    let n = d_win.len();
    let nrmse_v = nrmse(
        &DMatrix::from_column_slice(n, 1, &y),
        &DMatrix::from_column_slice(n, 1, &d_win),
    )?;

    Ok(EqReport {
        seed: spec.seed,
        n_nodes: cfg.n_nodes,
        achieved_radius: topo.achieved_radius,
        srr: srr_main,
        srr_l1,
        bit_error_rate: ber,
        channel_bit_error_rate: channel_ber,
        nrmse: nrmse_v,
        d: d_win,
        u: u_win,
        y,
    })
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Interquartile range with linear interpolation between order statistics.
pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] * (1.0 - frac) + v[i + 1] * frac
        } else {
            v[i]
        }
    };
    q(0.75) - q(0.25)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel_srr_is_undefined() {
        let mut spec = ExperimentSpec::equalization_default(10, 1);
        spec.channel = ChannelParams::identity();
        spec.train_len = 400;
        spec.test_len = 200;
        assert!(matches!(run_equalization_experiment(&spec), Err(Error::SrrUndefined)));
    }

    #[test]
    fn wrong_task_rejected() {
        let spec = ExperimentSpec::equalization_default(10, 1);
        assert!(run_mg_experiment(&spec).is_err());
    }

    #[test]
    fn validation() {
        let mut spec = ExperimentSpec::mackey_glass_default(10, 1);
        spec.train_len = spec.reservoir.washout;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::mackey_glass_default(10, 1);
        spec.test_len = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn small_runs_are_deterministic() {
        let mut spec = ExperimentSpec::equalization_default(12, 5);
        spec.train_len = 500;
        spec.test_len = 200;
        let a = run_equalization_experiment(&spec).unwrap();
        let b = run_equalization_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.srr <= 1.0);

        let mut spec = ExperimentSpec::mackey_glass_default(20, 5);
        spec.train_len = 400;
        spec.test_len = 100;
        let a = run_mg_experiment(&spec).unwrap();
        let b = run_mg_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.horizons.len(), 2);
    }

    #[test]
    fn median_and_iqr() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
    }
}
