//! C ABI over the `magres` toolkit.
//!
//! Every fallible call returns a [`MagresStatus`]; on failure the message is
//! available from [`magres_last_error`] on the same thread until the next
//! failing call. Handles are opaque and must be released with their `_free`
//! function. Strings returned through `out` parameters are owned by the
//! caller and released with [`magres_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use magres::config::{reservoir_from_toml, Config};
use magres::device::{asn_output, bsn_output, retention_time, MagnetParams, NeuronNoise, NeuronParams};
use magres::linalg::spectral_radius;
use magres::reservoir::{init_topology, step, ReservoirConfig, ReservoirTopology};
use magres::rng::{streams, RngState};
use magres::synapse::{quantize, weights_to_conductances};
use magres::tasks::experiment::run_experiment;
use magres::Error;
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagresStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Numeric = 4,
    Config = 5,
    Io = 6,
    Panic = 7,
}

/// Analog/binary neuron with its own noise stream.
pub struct MagresNeuron {
    params: NeuronParams,
    noise: NeuronNoise,
}

/// Reservoir topology plus its current state.
pub struct MagresReservoir {
    cfg: ReservoirConfig,
    topo: ReservoirTopology,
    state: DVector<f64>,
    noise: RngState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MagresStatus {
    match e {
        Error::Config(_) | Error::Parse(_) => MagresStatus::Config,
        Error::Io { .. } => MagresStatus::Io,
        Error::Dimension { .. } => MagresStatus::Dimension,
        Error::Domain(_) => MagresStatus::InvalidArgument,
        _ => MagresStatus::Numeric,
    }
}

struct Fail(MagresStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MagresStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MagresStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MagresStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MagresStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MagresStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), Fail> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got }.into())
    }
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn magres_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Toolkit version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn magres_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn magres_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Mean retention time `attempt_time * exp(energy_barrier)` in seconds.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_retention_time(energy_barrier: f64, attempt_time: f64, out: *mut f64) -> MagresStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = MagnetParams::new(energy_barrier, attempt_time)?;
        *out = retention_time(&m);
        Ok(())
    })
}

/// Creates a neuron with white noise, the saturating envelope and the given
/// supply, slope and noise scale.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_neuron_new(
    v_dd: f64,
    beta: f64,
    alpha0: f64,
    seed: u64,
    out: *mut *mut MagresNeuron,
) -> MagresStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let params = NeuronParams {
            v_dd,
            beta,
            alpha0,
            ..NeuronParams::default()
        };
        params.validate()?;
        let noise = NeuronNoise::new(params.noise_process, RngState::with_stream(seed, streams::NEURON));
        *out = Box::into_raw(Box::new(MagresNeuron { params, noise }));
        Ok(())
    })
}

/// # Safety
/// `neuron` must come from [`magres_neuron_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn magres_neuron_free(neuron: *mut MagresNeuron) {
    if !neuron.is_null() {
        drop(Box::from_raw(neuron));
    }
}

/// One analog neuron sample in volts.
///
/// # Safety
/// `neuron` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_neuron_asn(neuron: *mut MagresNeuron, v_in: f64, out: *mut f64) -> MagresStatus {
    guard(|| {
        let n = out_arg(neuron, "neuron")?;
        let out = out_arg(out, "out")?;
        if !v_in.is_finite() {
            return Err(Fail(MagresStatus::InvalidArgument, "v_in is not finite".into()));
        }
        *out = asn_output(v_in, &n.params, &mut n.noise);
        Ok(())
    })
}

/// One binary neuron sample, -v_dd/2 or +v_dd/2.
///
/// # Safety
/// `neuron` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_neuron_bsn(neuron: *mut MagresNeuron, v_in: f64, out: *mut f64) -> MagresStatus {
    guard(|| {
        let n = out_arg(neuron, "neuron")?;
        let out = out_arg(out, "out")?;
        if !v_in.is_finite() {
            return Err(Fail(MagresStatus::InvalidArgument, "v_in is not finite".into()));
        }
        *out = bsn_output(v_in, &n.params, &mut n.noise);
        Ok(())
    })
}

/// Builds a reservoir from a TOML table of reservoir fields; omitted fields
/// take their defaults. The state starts at zero.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_new(
    config_toml: *const c_char,
    out: *mut *mut MagresReservoir,
) -> MagresStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        let out = out_arg(out, "out")?;
        let cfg = reservoir_from_toml(text)?;
        let topo = init_topology(&cfg)?;
        let r = MagresReservoir {
            state: DVector::zeros(cfg.n_nodes),
            noise: RngState::with_stream(cfg.seed, streams::RESERVOIR_NOISE),
            cfg,
            topo,
        };
        *out = Box::into_raw(Box::new(r));
        Ok(())
    })
}

/// # Safety
/// `reservoir` must come from [`magres_reservoir_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_free(reservoir: *mut MagresReservoir) {
    if !reservoir.is_null() {
        drop(Box::from_raw(reservoir));
    }
}

/// Writes the node, input and output counts; any out pointer may be null.
///
/// # Safety
/// `reservoir` must be a live handle; non-null outs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_dims(
    reservoir: *const MagresReservoir,
    n_nodes: *mut usize,
    n_inputs: *mut usize,
    n_outputs: *mut usize,
) -> MagresStatus {
    guard(|| {
        let r = reservoir.as_ref().ok_or_else(|| null("reservoir"))?;
        for (p, v) in [
            (n_nodes, r.topo.n_nodes()),
            (n_inputs, r.topo.n_inputs()),
            (n_outputs, r.topo.n_outputs()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Spectral radius the recurrent matrix was scaled to.
///
/// # Safety
/// `reservoir` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_spectral_radius(
    reservoir: *const MagresReservoir,
    out: *mut f64,
) -> MagresStatus {
    guard(|| {
        let r = reservoir.as_ref().ok_or_else(|| null("reservoir"))?;
        let out = out_arg(out, "out")?;
        *out = spectral_radius(&r.topo.w_self)?.radius;
        Ok(())
    })
}

/// Advances the state one tick with input `u` and fed-back output `y_prev`.
///
/// # Safety
/// `reservoir` must be a live handle; `u` and `y_prev` must hold `n_u` and
/// `n_y` doubles.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_step(
    reservoir: *mut MagresReservoir,
    u: *const f64,
    n_u: usize,
    y_prev: *const f64,
    n_y: usize,
) -> MagresStatus {
    guard(|| {
        let r = out_arg(reservoir, "reservoir")?;
        let u = DVector::from_column_slice(slice_arg(u, n_u, "u")?);
        let y = DVector::from_column_slice(slice_arg(y_prev, n_y, "y_prev")?);
        r.state = step(&r.state, &u, &y, &r.topo, &r.cfg, &mut r.noise)?;
        Ok(())
    })
}

/// Copies the state into `out`, which must hold exactly `n_nodes` doubles.
///
/// # Safety
/// `reservoir` must be a live handle; `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_state(
    reservoir: *const MagresReservoir,
    out: *mut f64,
    len: usize,
) -> MagresStatus {
    guard(|| {
        let r = reservoir.as_ref().ok_or_else(|| null("reservoir"))?;
        check_len("state buffer", r.state.len(), len)?;
        slice_out(out, len, "out")?.copy_from_slice(r.state.as_slice());
        Ok(())
    })
}

/// Resets the state to zero and rewinds the noise stream.
///
/// # Safety
/// `reservoir` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn magres_reservoir_reset(reservoir: *mut MagresReservoir) -> MagresStatus {
    guard(|| {
        let r = out_arg(reservoir, "reservoir")?;
        r.state.fill(0.0);
        r.noise = RngState::with_stream(r.cfg.seed, streams::RESERVOIR_NOISE);
        Ok(())
    })
}

/// Maps a row-major `rows x cols` weight matrix onto differential conductance
/// pairs, optionally quantized to `levels` levels (0 disables). Writes
/// `rows*cols` values to each of `g_plus` and `g_minus`, and the scale in S
/// per unit weight to `g_scale`.
///
/// # Safety
/// `weights`, `g_plus` and `g_minus` must hold `rows*cols` doubles;
/// `g_scale` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_weights_to_conductances(
    weights: *const f64,
    rows: usize,
    cols: usize,
    g_max: f64,
    levels: usize,
    g_plus: *mut f64,
    g_minus: *mut f64,
    g_scale: *mut f64,
) -> MagresStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(MagresStatus::InvalidArgument, "rows * cols overflows".into()))?;
        let w = DMatrix::from_row_slice(rows, cols, slice_arg(weights, len, "weights")?);
        let mut net = weights_to_conductances(&w, g_max)?;
        if levels > 0 {
            net = quantize(&net, levels)?;
        }
        let gp = slice_out(g_plus, len, "g_plus")?;
        let gm = slice_out(g_minus, len, "g_minus")?;
        let scale = out_arg(g_scale, "g_scale")?;
        for i in 0..rows {
            for j in 0..cols {
                gp[i * cols + j] = net.g_plus[(i, j)];
                gm[i * cols + j] = net.g_minus[(i, j)];
            }
        }
        *scale = net.g_scale;
        Ok(())
    })
}

/// Runs the experiment described by a TOML config for a single seed and
/// returns its metrics as JSON in `out_json`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out_json` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn magres_run_experiment(config_toml: *const c_char, out_json: *mut *mut c_char) -> MagresStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let config = Config::parse(text)?;
        let report = run_experiment(config.require_experiment()?)?;
        let json = serde_json::to_string(&report.summary()).expect("summary serializes");
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}
