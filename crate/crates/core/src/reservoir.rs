//! Stochastic leaky reservoir: topology generation, the discrete-time update
//! and teacher-forced / free-running execution.
//!
//! One tick of the network is
//!
//! ```text
//! z  = W_in u[t+1] + W_fb y[t] + W_self x[t]
//! x' = gain * tanh(z) + (1 - leak) * x[t] - noise_amp * xi
//! ```
//!
//! with `xi` a standard normal draw per node, and `x'` clamped to `[-1, 1]`
//! the way a neuron output saturates at its supply rails.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::spectral_radius;
use crate::matrix_io;
use crate::numfmt::fmt_sig;
use crate::rng::{streams, RngState};
use crate::training::Readout;

/// Redraws of the recurrent matrix allowed when a sparse draw is nilpotent.
pub const MAX_TOPOLOGY_ATTEMPTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirConfig {
    pub n_nodes: usize,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub feedback_scale: f64,
    pub connectivity: f64,
    pub leak: f64,
    pub gain: f64,
    pub noise_amp: f64,
    pub washout: usize,
    pub seed: u64,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            n_nodes: 100,
            n_inputs: 1,
            n_outputs: 1,
            spectral_radius: 0.9,
            input_scale: 1.0,
            feedback_scale: 1.0,
            connectivity: 0.1,
            leak: 0.3,
            gain: 0.3,
            noise_amp: 1e-4,
            washout: 100,
            seed: 0,
        }
    }
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::domain("n_nodes must be > 0"));
        }
        if !(self.leak > 0.0 && self.leak <= 1.0) {
            return Err(Error::domain(format!("leak must be in (0, 1], got {}", self.leak)));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::domain("gain must be > 0"));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::domain("spectral_radius must be > 0"));
        }
        if !(self.connectivity > 0.0 && self.connectivity <= 1.0) {
            return Err(Error::domain(format!(
                "connectivity must be in (0, 1], got {}",
                self.connectivity
            )));
        }
        if !(self.noise_amp >= 0.0 && self.noise_amp.is_finite()) {
            return Err(Error::domain("noise_amp must be >= 0"));
        }
        if !self.input_scale.is_finite() || !self.feedback_scale.is_finite() {
            return Err(Error::domain("input_scale and feedback_scale must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirTopology {
    /// N x K
    pub w_in: DMatrix<f64>,
    /// N x N
    pub w_self: DMatrix<f64>,
    /// N x L
    pub w_fb: DMatrix<f64>,
    pub achieved_radius: f64,
}

impl ReservoirTopology {
    pub fn n_nodes(&self) -> usize {
        self.w_self.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.w_fb.ncols()
    }

    /// Fraction of nonzero entries in the recurrent matrix.
    pub fn connectivity(&self) -> f64 {
        let nnz = self.w_self.iter().filter(|v| **v != 0.0).count();
        nnz as f64 / self.w_self.len() as f64
    }

    /// Removes the output-to-reservoir path.
    pub fn without_feedback(mut self) -> Self {
        self.w_fb.fill(0.0);
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# magres reservoir topology\n");
        let _ = writeln!(out, "achieved_radius {:?}", self.achieved_radius);
        matrix_io::write_matrix(&mut out, "w_in", &self.w_in);
        matrix_io::write_matrix(&mut out, "w_self", &self.w_self);
        matrix_io::write_matrix(&mut out, "w_fb", &self.w_fb);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut f = matrix_io::parse(text)?;
        let achieved_radius = f
            .field("achieved_radius")?
            .parse()
            .map_err(|_| Error::Parse("bad achieved_radius".into()))?;
        let topo = Self {
            w_in: f.take_matrix("w_in")?,
            w_self: f.take_matrix("w_self")?,
            w_fb: f.take_matrix("w_fb")?,
            achieved_radius,
        };
        let n = topo.w_self.nrows();
        check_dim("w_self columns", n, topo.w_self.ncols())?;
        check_dim("w_in rows", n, topo.w_in.nrows())?;
        check_dim("w_fb rows", n, topo.w_fb.nrows())?;
        Ok(topo)
    }
}

/// Random topology: dense uniform(-1, 1) input and feedback matrices scaled by
/// `input_scale` / `feedback_scale`, and a sparse uniform(-1, 1) recurrent
/// matrix rescaled to the configured spectral radius.
pub fn init_topology(cfg: &ReservoirConfig) -> Result<ReservoirTopology> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let nnz = ((cfg.connectivity * (n * n) as f64).round() as usize).clamp(1, n * n);
    for attempt in 0..MAX_TOPOLOGY_ATTEMPTS {
        let mut rng = RngState::with_stream(cfg.seed, streams::W_SELF + attempt as u64);
        let mut w_self = DMatrix::zeros(n, n);
        for flat in index::sample(rng.inner_mut(), n * n, nnz) {
            let v = rng.uniform(-1.0, 1.0);
            w_self[(flat / n, flat % n)] = v;
        }
        match build(cfg, w_self) {
            Err(Error::ZeroSpectralRadius { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::ZeroSpectralRadius {
        attempts: MAX_TOPOLOGY_ATTEMPTS,
    })
}

/// Same as [`init_topology`] but with a caller-supplied recurrent matrix,
/// which is rescaled to the configured spectral radius.
pub fn init_topology_with_recurrent(cfg: &ReservoirConfig, w_self: DMatrix<f64>) -> Result<ReservoirTopology> {
    cfg.validate()?;
    check_dim("recurrent matrix rows", cfg.n_nodes, w_self.nrows())?;
    check_dim("recurrent matrix columns", cfg.n_nodes, w_self.ncols())?;
    build(cfg, w_self)
}

fn build(cfg: &ReservoirConfig, w_self: DMatrix<f64>) -> Result<ReservoirTopology> {
    let raw = spectral_radius(&w_self)?.radius;
    if raw == 0.0 {
        return Err(Error::ZeroSpectralRadius { attempts: 1 });
    }
    let w_self = w_self * (cfg.spectral_radius / raw);
    let achieved_radius = spectral_radius(&w_self)?.radius;
    let n = cfg.n_nodes;
    let mut rng = RngState::with_stream(cfg.seed, streams::W_IN);
    let w_in = DMatrix::from_fn(n, cfg.n_inputs, |_, _| cfg.input_scale * rng.uniform(-1.0, 1.0));
    let mut rng = RngState::with_stream(cfg.seed, streams::W_FB);
    let w_fb = DMatrix::from_fn(n, cfg.n_outputs, |_, _| cfg.feedback_scale * rng.uniform(-1.0, 1.0));
    Ok(ReservoirTopology {
        w_in,
        w_self,
        w_fb,
        achieved_radius,
    })
}

/// Readout feature vector built from a reservoir state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// `x`
    StateOnly,
    /// `[1; u; x]`
    BiasInputState,
}

impl FeatureMode {
    pub fn dim(self, n_inputs: usize, n_nodes: usize) -> usize {
        match self {
            FeatureMode::StateOnly => n_nodes,
            FeatureMode::BiasInputState => 1 + n_inputs + n_nodes,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::StateOnly => "state_only",
            FeatureMode::BiasInputState => "bias_input_state",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "state_only" => Ok(FeatureMode::StateOnly),
            "bias_input_state" => Ok(FeatureMode::BiasInputState),
            _ => Err(Error::Parse(format!("unknown feature mode `{s}`"))),
        }
    }
}

pub fn features(mode: FeatureMode, u: &[f64], x: &[f64]) -> DVector<f64> {
    match mode {
        FeatureMode::StateOnly => DVector::from_column_slice(x),
        FeatureMode::BiasInputState => {
            let mut f = DVector::zeros(1 + u.len() + x.len());
            f[0] = 1.0;
            f.rows_mut(1, u.len()).copy_from_slice(u);
            f.rows_mut(1 + u.len(), x.len()).copy_from_slice(x);
            f
        }
    }
}

/// Time-indexed record of one run. Row `t` of each matrix belongs to tick `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrace {
    /// T x N
    pub states: DMatrix<f64>,
    /// T x K
    pub inputs: DMatrix<f64>,
    /// T x L: teacher values when teacher-forced, generated values when free-running.
    pub outputs: DMatrix<f64>,
    /// Leading rows excluded from readout training.
    pub washout: usize,
    pub time_step: f64,
}

impl StateTrace {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn state(&self, t: usize) -> DVector<f64> {
        self.states.row(t).transpose()
    }

    /// Feature matrix (features x time) over the rows kept for training.
    pub fn feature_matrix(&self, mode: FeatureMode) -> DMatrix<f64> {
        let kept = self.len().saturating_sub(self.washout);
        let dim = mode.dim(self.inputs.ncols(), self.states.ncols());
        let mut f = DMatrix::zeros(dim, kept);
        for (col, t) in (self.washout..self.len()).enumerate() {
            let u: Vec<f64> = self.inputs.row(t).iter().copied().collect();
            let x: Vec<f64> = self.states.row(t).iter().copied().collect();
            f.set_column(col, &features(mode, &u, &x));
        }
        f
    }

    /// CSV `t,x_0..x_{N-1},u_*,y_*` with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let (n, k, l) = (self.states.ncols(), self.inputs.ncols(), self.outputs.ncols());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..k).map(|i| format!("u_{i}")));
        header.extend((0..l).map(|i| format!("y_{i}")));
        let mut out = header.join(",");
        out.push('\n');
        for t in 0..self.len() {
            out.push_str(&t.to_string());
            for v in self
                .states
                .row(t)
                .iter()
                .chain(self.inputs.row(t).iter())
                .chain(self.outputs.row(t).iter())
            {
                out.push(',');
                out.push_str(&fmt_sig(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// One reservoir tick. `noise` is only consumed when `noise_amp > 0`.
pub fn step(
    x: &DVector<f64>,
    u: &DVector<f64>,
    y_prev: &DVector<f64>,
    topo: &ReservoirTopology,
    cfg: &ReservoirConfig,
    noise: &mut RngState,
) -> Result<DVector<f64>> {
    check_dim("state vector", topo.n_nodes(), x.len())?;
    check_dim("input vector", topo.n_inputs(), u.len())?;
    check_dim("feedback vector", topo.n_outputs(), y_prev.len())?;
    Ok(step_unchecked(x, u, y_prev, topo, cfg, noise))
}

fn step_unchecked(
    x: &DVector<f64>,
    u: &DVector<f64>,
    y_prev: &DVector<f64>,
    topo: &ReservoirTopology,
    cfg: &ReservoirConfig,
    noise: &mut RngState,
) -> DVector<f64> {
    let mut z = &topo.w_self * x;
    z.gemv(1.0, &topo.w_in, u, 1.0);
    z.gemv(1.0, &topo.w_fb, y_prev, 1.0);
    let retain = 1.0 - cfg.leak;
    let mut next = DVector::zeros(x.len());
    for i in 0..x.len() {
        let mut v = cfg.gain * z[i].tanh() + retain * x[i];
        if cfg.noise_amp > 0.0 {
            v -= cfg.noise_amp * noise.normal();
        }
        next[i] = v.clamp(-1.0, 1.0);
    }
    next
}

/// Teacher-forced run from the zero state: the feedback path at tick `t`
/// carries `targets[t-1]` (zero at `t = 0`).
pub fn run_teacher_forced(
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    topo: &ReservoirTopology,
    cfg: &ReservoirConfig,
    rng: &mut RngState,
) -> Result<StateTrace> {
    let x0 = DVector::zeros(topo.n_nodes());
    run_teacher_forced_from(&x0, inputs, targets, topo, cfg, rng)
}

pub fn run_teacher_forced_from(
    x0: &DVector<f64>,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    topo: &ReservoirTopology,
    cfg: &ReservoirConfig,
    rng: &mut RngState,
) -> Result<StateTrace> {
    let t_len = inputs.nrows();
    check_dim("target rows", t_len, targets.nrows())?;
    check_dim("input columns", topo.n_inputs(), inputs.ncols())?;
    check_dim("target columns", topo.n_outputs(), targets.ncols())?;
    check_dim("initial state", topo.n_nodes(), x0.len())?;
    if t_len <= cfg.washout {
        return Err(Error::domain(format!(
            "run length {t_len} must exceed washout {}",
            cfg.washout
        )));
    }
    let mut states = DMatrix::zeros(t_len, topo.n_nodes());
    let mut x = x0.clone();
    let mut y_prev = DVector::zeros(topo.n_outputs());
    for t in 0..t_len {
        let u = inputs.row(t).transpose();
        x = step_unchecked(&x, &u, &y_prev, topo, cfg, rng);
        states.set_row(t, &x.transpose());
        y_prev = targets.row(t).transpose();
    }
    Ok(StateTrace {
        states,
        inputs: inputs.clone(),
        outputs: targets.clone(),
        washout: cfg.washout,
        time_step: 1.0,
    })
}

/// Closed-loop generation. Before each tick the readout of the current state
/// is fed back through `W_fb`; the trace records the new state and its readout.
///
/// `external_inputs` (steps x K) drives `W_in`; when absent the input is zero.
/// The readout of `x0` uses the first input row.
pub fn run_free(
    x0: &DVector<f64>,
    readout: &Readout,
    steps: usize,
    topo: &ReservoirTopology,
    cfg: &ReservoirConfig,
    rng: &mut RngState,
    external_inputs: Option<&DMatrix<f64>>,
) -> Result<StateTrace> {
    let (n, k, l) = (topo.n_nodes(), topo.n_inputs(), topo.n_outputs());
    check_dim("initial state", n, x0.len())?;
    check_dim("readout rows", l, readout.weights.nrows())?;
    check_dim("readout columns", readout.mode.dim(k, n), readout.weights.ncols())?;
    let inputs = match external_inputs {
        Some(m) => {
            check_dim("external input rows", steps, m.nrows())?;
            check_dim("external input columns", k, m.ncols())?;
            m.clone()
        }
        None => DMatrix::zeros(steps, k),
    };
    let mut states = DMatrix::zeros(steps, n);
    let mut outputs = DMatrix::zeros(steps, l);
    let mut x = x0.clone();
    let first_u: Vec<f64> = if steps > 0 {
        inputs.row(0).iter().copied().collect()
    } else {
        vec![0.0; k]
    };
    let mut y = readout.apply(&first_u, x.as_slice());
    for t in 0..steps {
        let u = inputs.row(t).transpose();
        x = step_unchecked(&x, &u, &y, topo, cfg, rng);
        y = readout.apply(u.as_slice(), x.as_slice());
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("free-run output"));
        }
        states.set_row(t, &x.transpose());
        outputs.set_row(t, &y.transpose());
    }
    Ok(StateTrace {
        states,
        inputs,
        outputs,
        washout: 0,
        time_step: 1.0,
    })
}
