//! Symbol source and nonlinear distortion channel.
//!
//! The channel is a FIR filter (inter-symbol interference) followed by a
//! memoryless polynomial and additive uniform noise:
//! `s(t) = sum_k B_k d(t-k)`, `u(t) = sum_n A_n s(t)^n + C r(t)`, `r ~ U(-1, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// FIR taps `B_k`, `k = 0, 1, ...`
    pub fir_taps: Vec<f64>,
    /// Polynomial coefficients `A_n`; `A_0` is the constant term.
    pub poly_coeffs: Vec<f64>,
    /// Uniform noise amplitude `C`.
    pub noise_amp: f64,
    /// Noise seed; when absent the experiment seed is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            fir_taps: vec![1.0, 0.25, -0.1],
            poly_coeffs: vec![0.0, 1.0, 0.2, -0.1],
            noise_amp: 0.1,
            seed: None,
        }
    }
}

impl ChannelParams {
    pub fn identity() -> Self {
        Self {
            fir_taps: vec![1.0],
            poly_coeffs: vec![0.0, 1.0],
            noise_amp: 0.0,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fir_taps.iter().any(|b| *b != 0.0) {
            return Err(Error::domain("channel needs at least one nonzero FIR tap"));
        }
        if !self.poly_coeffs.iter().any(|a| *a != 0.0) {
            return Err(Error::domain(
                "channel needs at least one nonzero polynomial coefficient",
            ));
        }
        if !(self.noise_amp >= 0.0 && self.noise_amp.is_finite()) {
            return Err(Error::domain("channel noise_amp must be >= 0"));
        }
        if self.fir_taps.iter().chain(&self.poly_coeffs).any(|v| !v.is_finite()) {
            return Err(Error::domain("channel coefficients must be finite"));
        }
        Ok(())
    }
}

/// `n` i.i.d. symbols from the `levels`-ary PAM alphabet evenly spaced on `[-1, 1]`.
pub fn gen_symbols(n: usize, levels: usize, rng: &mut RngState) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::domain("symbol alphabet needs at least 2 levels"));
    }
    let top = (levels - 1) as f64;
    Ok((0..n).map(|_| -1.0 + 2.0 * rng.below(levels) as f64 / top).collect())
}

/// Passes `d` through the channel; symbols before the start are zero.
pub fn channel_apply(d: &[f64], p: &ChannelParams, rng: &mut RngState) -> Result<Vec<f64>> {
    if d.len() < p.fir_taps.len() {
        return Err(Error::domain(format!(
            "sequence length {} shorter than the FIR filter ({} taps)",
            d.len(),
            p.fir_taps.len()
        )));
    }
    Ok((0..d.len())
        .map(|t| {
            let s: f64 = p
                .fir_taps
                .iter()
                .enumerate()
                .filter(|(k, _)| *k <= t)
                .map(|(k, b)| b * d[t - k])
                .sum();
            // Horner evaluation of sum_n A_n s^n
            let poly = p.poly_coeffs.iter().rev().fold(0.0, |acc, a| acc * s + a);
            let noise = if p.noise_amp > 0.0 {
                p.noise_amp * rng.uniform(-1.0, 1.0)
            } else {
                0.0
            };
            poly + noise
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_symbols() {
        let mut rng = RngState::new(1);
        let s = gen_symbols(100_000, 2, &mut rng).unwrap();
        assert!(s.iter().all(|v| *v == 1.0 || *v == -1.0));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.02);
        assert_eq!(s[..50], gen_symbols(50, 2, &mut RngState::new(1)).unwrap()[..]);
        assert!(gen_symbols(5, 1, &mut rng).is_err());
    }

    #[test]
    fn pam4_alphabet() {
        let mut rng = RngState::new(2);
        let s = gen_symbols(1000, 4, &mut rng).unwrap();
        for v in [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0] {
            assert!(s.iter().any(|x| (x - v).abs() < 1e-15));
        }
    }

    #[test]
    fn identity_channel() {
        let mut rng = RngState::new(3);
        let d = gen_symbols(64, 2, &mut rng).unwrap();
        assert_eq!(channel_apply(&d, &ChannelParams::identity(), &mut rng).unwrap(), d);
    }

    #[test]
    fn quadratic_example() {
        let p = ChannelParams {
            fir_taps: vec![1.0],
            poly_coeffs: vec![0.0, 1.0, 0.3],
            noise_amp: 0.0,
            seed: None,
        };
        let u = channel_apply(&[0.5; 4], &p, &mut RngState::new(0)).unwrap();
        assert!(u.iter().all(|v| (v - 0.575).abs() < 1e-15));
    }

    #[test]
    fn isi_warm_up_is_zero_padded() {
        let p = ChannelParams {
            fir_taps: vec![1.0, 0.5],
            poly_coeffs: vec![0.0, 1.0],
            noise_amp: 0.0,
            seed: None,
        };
        let u = channel_apply(&[1.0, -1.0, 1.0], &p, &mut RngState::new(0)).unwrap();
        assert_eq!(u, vec![1.0, -0.5, 0.5]);
        assert!(channel_apply(&[1.0], &p, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn pure_noise_is_bounded() {
        let p = ChannelParams {
            fir_taps: vec![1.0],
            poly_coeffs: vec![0.0],
            noise_amp: 0.3,
            seed: None,
        };
        let u = channel_apply(&vec![1.0; 10_000], &p, &mut RngState::new(4)).unwrap();
        assert!(u.iter().all(|v| v.abs() <= 0.3));
        assert!(u.iter().cloned().fold(0.0, f64::max) > 0.29);
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn linear_noiseless_channel_commutes_with_scaling(seed in 0u64..1000, c in -3.0f64..3.0) {
            let mut rng = RngState::new(seed);
            let taps: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let p = ChannelParams { fir_taps: taps, poly_coeffs: vec![0.0, rng.uniform(0.5, 2.0)], noise_amp: 0.0, seed: None };
            let d = gen_symbols(40, 2, &mut rng).unwrap();
            let scaled: Vec<f64> = d.iter().map(|v| c * v).collect();
            let a = channel_apply(&scaled, &p, &mut rng).unwrap();
            let b = channel_apply(&d, &p, &mut rng).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - c * y).abs() < 1e-12);
            }
        }
    }
}
