//! Behavioral models of magnet-based stochastic neurons.
//!
//! The analog stochastic neuron (ASN) produces a noisy `tanh` response that is
//! continuous between the supply rails. The binary stochastic neuron (BSN,
//! "p-bit") produces one of the two rails with a `tanh`-shaped probability.
//! Both are driven by a [`NeuronNoise`] source that owns its random stream.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::rng::RngState;

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
pub const DEFAULT_TEMPERATURE: f64 = 300.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetParams {
    /// Energy barrier in units of kT.
    pub energy_barrier: f64,
    /// Attempt time, seconds.
    pub attempt_time: f64,
    /// A/m
    pub saturation_magnetization: Option<f64>,
    /// A/m
    pub anisotropy_field: Option<f64>,
    /// m^3
    pub volume: Option<f64>,
    /// Kelvin, used when checking the barrier against material parameters.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

impl MagnetParams {
    pub fn new(energy_barrier: f64, attempt_time: f64) -> Result<Self> {
        let m = Self {
            energy_barrier,
            attempt_time,
            saturation_magnetization: None,
            anisotropy_field: None,
            volume: None,
            temperature: DEFAULT_TEMPERATURE,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds the parameters from material constants, deriving the barrier.
    pub fn from_material(
        saturation_magnetization: f64,
        anisotropy_field: f64,
        volume: f64,
        temperature: f64,
        attempt_time: f64,
    ) -> Result<Self> {
        let energy_barrier =
            energy_barrier_from_material(saturation_magnetization, anisotropy_field, volume, temperature)?;
        let m = Self {
            energy_barrier,
            attempt_time,
            saturation_magnetization: Some(saturation_magnetization),
            anisotropy_field: Some(anisotropy_field),
            volume: Some(volume),
            temperature,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.energy_barrier.is_finite() || self.energy_barrier < 0.0 {
            return Err(Error::domain("energy_barrier must be finite and >= 0"));
        }
        if !self.attempt_time.is_finite() || self.attempt_time <= 0.0 {
            return Err(Error::domain("attempt_time must be finite and > 0"));
        }
        if let (Some(ms), Some(hk), Some(vol)) = (self.saturation_magnetization, self.anisotropy_field, self.volume) {
            let expected = energy_barrier_from_material(ms, hk, vol, self.temperature)?;
            let scale = expected.abs().max(self.energy_barrier.abs()).max(f64::MIN_POSITIVE);
            if (expected - self.energy_barrier).abs() > 1e-9 * scale {
                return Err(Error::domain(format!(
                    "energy_barrier {} disagrees with material parameters ({expected} kT)",
                    self.energy_barrier
                )));
            }
        }
        Ok(())
    }
}

/// Arrhenius retention time `tau0 * exp(U / kT)`, in seconds.
pub fn retention_time(m: &MagnetParams) -> f64 {
    m.attempt_time * m.energy_barrier.exp()
}

/// Barrier `mu0 * Ms * Hk * volume / 2` expressed in units of `k_B * T`.
pub fn energy_barrier_from_material(
    saturation_magnetization: f64,
    anisotropy_field: f64,
    volume: f64,
    temperature: f64,
) -> Result<f64> {
    let positive = |x: f64, name: &str| -> Result<()> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("{name} must be finite and > 0, got {x}")))
        }
    };
    positive(saturation_magnetization, "saturation_magnetization")?;
    positive(anisotropy_field, "anisotropy_field")?;
    positive(temperature, "temperature")?;
    if !volume.is_finite() || volume < 0.0 {
        return Err(Error::domain(format!("volume must be finite and >= 0, got {volume}")));
    }
    let joules = MU_0 * saturation_magnetization * anisotropy_field * volume / 2.0;
    Ok(joules / (K_B * temperature))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseEnvelope {
    /// `alpha(v_in) = alpha0`
    Constant,
    /// `alpha(v_in) = alpha0 * (1 - tanh^2(beta * v_in))`; noise vanishes at the rails.
    Saturating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseProcess {
    White,
    /// First-order autoregressive process with unit stationary variance.
    Correlated {
        correlation_time: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronParams {
    /// Supply span `V+ - V-`, volts.
    pub v_dd: f64,
    /// Transfer gain, 1/V.
    pub beta: f64,
    /// Peak noise amplitude, volts.
    pub alpha0: f64,
    pub noise_envelope: NoiseEnvelope,
    pub noise_process: NoiseProcess,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            v_dd: 0.8,
            beta: 20.0,
            alpha0: 0.05,
            noise_envelope: NoiseEnvelope::Saturating,
            noise_process: NoiseProcess::White,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_dd > 0.0 && self.v_dd.is_finite()) {
            return Err(Error::domain("v_dd must be > 0"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain("beta must be > 0"));
        }
        if !(self.alpha0 >= 0.0 && self.alpha0.is_finite()) {
            return Err(Error::domain("alpha0 must be >= 0"));
        }
        if let NoiseProcess::Correlated { correlation_time } = self.noise_process {
            if !(correlation_time > 0.0 && correlation_time.is_finite()) {
                return Err(Error::domain("correlation_time must be > 0"));
            }
        }
        Ok(())
    }

    pub fn rail(&self) -> f64 {
        self.v_dd / 2.0
    }

    /// Noiseless transfer curve `v_dd * tanh(beta * v_in) / 2`.
    pub fn mean_response(&self, v_in: f64) -> f64 {
        self.v_dd * (self.beta * v_in).tanh() / 2.0
    }

    /// Noise amplitude `alpha(v_in)`.
    pub fn noise_amplitude(&self, v_in: f64) -> f64 {
        match self.noise_envelope {
            NoiseEnvelope::Constant => self.alpha0,
            NoiseEnvelope::Saturating => {
                let t = (self.beta * v_in).tanh();
                self.alpha0 * (1.0 - t * t)
            }
        }
    }

    /// Probability that a BSN outputs the positive rail.
    pub fn bsn_probability(&self, v_in: f64) -> f64 {
        (1.0 + (self.beta * v_in).tanh()) / 2.0
    }
}

/// Random source feeding a neuron: white Gaussian draws or an AR(1) process.
#[derive(Clone, Debug)]
pub struct NeuronNoise {
    rng: RngState,
    process: NoiseProcess,
    ar_state: Option<f64>,
}

impl NeuronNoise {
    pub fn new(process: NoiseProcess, rng: RngState) -> Self {
        Self {
            rng,
            process,
            ar_state: None,
        }
    }

    pub fn white(rng: RngState) -> Self {
        Self::new(NoiseProcess::White, rng)
    }

    /// Zero-mean, unit-variance sample.
    pub fn sample(&mut self) -> f64 {
        match self.process {
            NoiseProcess::White => self.rng.normal(),
            NoiseProcess::Correlated { correlation_time } => {
                let phi = (-1.0 / correlation_time).exp();
                let xi = self.rng.normal();
                let next = match self.ar_state {
                    // start from the stationary distribution
                    None => xi,
                    Some(prev) => phi * prev + (1.0 - phi * phi).sqrt() * xi,
                };
                self.ar_state = Some(next);
                next
            }
        }
    }

    /// Uniform draw on `[-1, 1)`, independent of the AR state.
    pub fn uniform_pm1(&mut self) -> f64 {
        self.rng.uniform(-1.0, 1.0)
    }

    pub fn rng(&self) -> &RngState {
        &self.rng
    }
}

/// Analog stochastic neuron output, clamped to the supply rails.
pub fn asn_output(v_in: f64, p: &NeuronParams, noise: &mut NeuronNoise) -> f64 {
    let r = noise.sample();
    let rail = p.rail();
    (p.mean_response(v_in) + p.noise_amplitude(v_in) * r).clamp(-rail, rail)
}

/// Binary stochastic neuron output: `sgn(tanh(beta v_in) + r) * v_dd / 2` with
/// `r` uniform on `(-1, 1)`, which gives `P(+rail) = (1 + tanh(beta v_in)) / 2`.
pub fn bsn_output(v_in: f64, p: &NeuronParams, noise: &mut NeuronNoise) -> f64 {
    let r = noise.uniform_pm1();
    if (p.beta * v_in).tanh() + r >= 0.0 {
        p.rail()
    } else {
        -p.rail()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferPoint {
    pub v_in: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferTable {
    pub points: Vec<TransferPoint>,
}

impl TransferTable {
    pub const CSV_HEADER: &'static str = "v_in,mean,min,max";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(40 * (self.points.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_sig(p.v_in),
                fmt_sig(p.mean),
                fmt_sig(p.min),
                fmt_sig(p.max)
            );
        }
        out
    }
}

/// Monte-Carlo sweep of the ASN transfer curve: per input point, the sample
/// mean and the min/max envelope of `samples_per_point` draws.
pub fn characterize_transfer(
    p: &NeuronParams,
    v_min: f64,
    v_max: f64,
    n_points: usize,
    samples_per_point: usize,
    noise: &mut NeuronNoise,
) -> Result<TransferTable> {
    p.validate()?;
    if !v_min.is_finite() || !v_max.is_finite() || v_min >= v_max {
        return Err(Error::domain(format!(
            "sweep bounds must satisfy v_min < v_max, got [{v_min}, {v_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::domain("n_points must be >= 2"));
    }
    if samples_per_point < 1 {
        return Err(Error::domain("samples_per_point must be >= 1"));
    }
    let center = (v_max + v_min) / 2.0;
    let half = (v_max - v_min) / 2.0;
    let last = (n_points - 1) as f64;
    let points = (0..n_points)
        .map(|i| {
            // centered parametrization keeps symmetric sweeps exactly odd
            let v_in = center + half * ((2 * i) as f64 - last) / last;
            let mut sum = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..samples_per_point {
                let v = asn_output(v_in, p, noise);
                sum += v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            TransferPoint {
                v_in,
                mean: sum / samples_per_point as f64,
                min: lo,
                max: hi,
            }
        })
        .collect();
    Ok(TransferTable { points })
}
