//! Linear readout training and evaluation metrics.
//!
//! Only the reservoir-to-output weights are learned. They minimize
//! `||W F - Y||^2 + lambda ||W||^2` over the post-washout feature matrix `F`
//! (features x time) and targets `Y` (outputs x time); the minimizer solves the
//! normal equations `W (F F^T + lambda I) = Y F^T`, which at `lambda = 0` is the
//! Wiener-Hopf solution.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::matrix_io;
pub use crate::reservoir::FeatureMode;
use crate::reservoir::{features, StateTrace};

pub const DEFAULT_LAMBDA: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub feature_mode: FeatureMode,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            feature_mode: FeatureMode::BiasInputState,
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("ridge lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Trained output weights together with the feature convention they expect.
#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    /// L x feature dimension
    pub weights: DMatrix<f64>,
    pub mode: FeatureMode,
}

impl Readout {
    pub fn zeros(n_outputs: usize, mode: FeatureMode, n_inputs: usize, n_nodes: usize) -> Self {
        Self {
            weights: DMatrix::zeros(n_outputs, mode.dim(n_inputs, n_nodes)),
            mode,
        }
    }

    pub fn apply(&self, u: &[f64], x: &[f64]) -> DVector<f64> {
        &self.weights * features(self.mode, u, x)
    }

    /// Readout of every row of a trace (T x L).
    pub fn apply_trace(&self, trace: &StateTrace) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(trace.len(), self.weights.nrows());
        for t in 0..trace.len() {
            let u: Vec<f64> = trace.inputs.row(t).iter().copied().collect();
            let x: Vec<f64> = trace.states.row(t).iter().copied().collect();
            out.set_row(t, &self.apply(&u, &x).transpose());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# magres readout\n");
        let _ = writeln!(out, "feature_mode {}", self.mode.name());
        matrix_io::write_matrix(&mut out, "w_out", &self.weights);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut f = matrix_io::parse(text)?;
        let mode = FeatureMode::from_name(f.field("feature_mode")?)?;
        Ok(Self {
            weights: f.take_matrix("w_out")?,
            mode,
        })
    }
}

/// Ridge solution for a feature matrix `f` (D x T) and targets `y` (L x T).
pub fn solve_ridge(f: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    check_dim("target samples", f.ncols(), y.ncols())?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain("ridge lambda must be >= 0"));
    }
    let d = f.nrows();
    let mut normal = f * f.transpose();
    for i in 0..d {
        normal[(i, i)] += lambda;
    }
    let rhs = f * y.transpose();
    let chol = match normal.clone().cholesky() {
        Some(c) => c,
        None if lambda == 0.0 => return Err(Error::SingularNormalMatrix),
        None => return Err(Error::NotPositiveDefinite),
    };
    if lambda == 0.0 {
        // numerically rank-deficient even though the factorization went through
        let l = chol.l_dirty();
        let scale = (0..d).map(|i| normal[(i, i)]).fold(0.0, f64::max);
        let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if d > 0 && min_pivot <= scale * d as f64 * f64::EPSILON {
            return Err(Error::SingularNormalMatrix);
        }
    }
    let w_t = chol.solve(&rhs);
    if w_t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge solution"));
    }
    Ok(w_t.transpose())
}

/// Trains the readout on the post-washout part of `trace` against `targets` (T x L).
pub fn train_readout(trace: &StateTrace, targets: &DMatrix<f64>, cfg: &RidgeConfig) -> Result<Readout> {
    cfg.validate()?;
    check_dim("target rows", trace.len(), targets.nrows())?;
    if trace.washout >= trace.len() {
        return Err(Error::domain("no samples left after washout"));
    }
    let f = trace.feature_matrix(cfg.feature_mode);
    let y = targets.rows(trace.washout, trace.len() - trace.washout).transpose();
    Ok(Readout {
        weights: solve_ridge(&f, &y, cfg.lambda)?,
        mode: cfg.feature_mode,
    })
}

/// Regularized objective `||W F - Y||^2 + lambda ||W||^2`.
pub fn ridge_objective(w: &DMatrix<f64>, f: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> f64 {
    (w * f - y).norm_squared() + lambda * w.norm_squared()
}

/// Root-mean-square error over the target's standard deviation, averaged over
/// output channels (columns).
pub fn nrmse(y: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<f64> {
    check_dim("prediction rows", target.nrows(), y.nrows())?;
    check_dim("prediction columns", target.ncols(), y.ncols())?;
    if target.nrows() == 0 || target.ncols() == 0 {
        return Err(Error::domain("empty series"));
    }
    let t = target.nrows() as f64;
    let mut total = 0.0;
    for c in 0..target.ncols() {
        let col = target.column(c);
        let mean = col.sum() / t;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t;
        if var == 0.0 {
            return Err(Error::ZeroVariance);
        }
        let mse = (y.column(c) - col).norm_squared() / t;
        total += (mse / var).sqrt();
    }
    Ok(total / target.ncols() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrrNorm {
    L1,
    L2,
}

/// Symbol recovery rate `1 - ||y - d|| / ||u - d||`: the fraction of the channel
/// distortion removed by the equalizer. 1 is perfect, 0 is no better than
/// passing the channel output through.
pub fn srr(y: &[f64], d: &[f64], u: &[f64], norm: SrrNorm) -> Result<f64> {
    check_dim("srr output length", d.len(), y.len())?;
    check_dim("srr channel length", d.len(), u.len())?;
    let dist = |a: &[f64]| -> f64 {
        let diffs = a.iter().zip(d).map(|(a, b)| a - b);
        match norm {
            SrrNorm::L1 => diffs.map(f64::abs).sum(),
            SrrNorm::L2 => diffs.map(|e| e * e).sum::<f64>().sqrt(),
        }
    };
    let base = dist(u);
    if base == 0.0 {
        return Err(Error::SrrUndefined);
    }
    Ok(1.0 - dist(y) / base)
}

/// Fraction of samples whose sign differs from the transmitted symbol.
pub fn bit_error_rate(y: &[f64], d: &[f64]) -> Result<f64> {
    check_dim("ber length", d.len(), y.len())?;
    if d.is_empty() {
        return Err(Error::domain("empty series"));
    }
    let errors = y.iter().zip(d).filter(|(y, d)| (**y >= 0.0) != (**d >= 0.0)).count();
    Ok(errors as f64 / d.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut r = RngState::new(seed);
        DMatrix::from_fn(rows, cols, |_, _| r.uniform(-1.0, 1.0))
    }

    #[test]
    fn identity_features() {
        let y = random(2, 5, 1);
        let w = solve_ridge(&DMatrix::identity(5, 5), &y, 0.0).unwrap();
        assert!((w - &y).amax() < 1e-14);
        let w = solve_ridge(&DMatrix::identity(5, 5), &y, 0.5).unwrap();
        assert!((w - &y / 1.5).amax() < 1e-14);
    }

    #[test]
    fn singular_at_zero_lambda() {
        let mut f = random(4, 50, 2);
        let row = f.row(0).into_owned();
        f.set_row(3, &row);
        assert!(matches!(
            solve_ridge(&f, &random(1, 50, 3), 0.0),
            Err(Error::SingularNormalMatrix)
        ));
        assert!(solve_ridge(&f, &random(1, 50, 3), 1e-3).is_ok());
        assert!(solve_ridge(&f, &random(1, 49, 3), 1e-3).is_err());
    }

    #[test]
    fn ridge_is_a_local_minimum() {
        let f = random(6, 120, 4);
        let y = random(2, 120, 5);
        let lambda = 0.01;
        let w = solve_ridge(&f, &y, lambda).unwrap();
        let base = ridge_objective(&w, &f, &y, lambda);
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                for delta in [1e-4, -1e-4] {
                    let mut p = w.clone();
                    p[(i, j)] += delta;
                    assert!(ridge_objective(&p, &f, &y, lambda) >= base);
                }
            }
        }
    }

    #[test]
    fn small_lambda_matches_normal_equations() {
        let f = random(5, 200, 6);
        let y = random(1, 200, 7);
        let exact = (&y * f.transpose()) * (&f * f.transpose()).try_inverse().unwrap();
        let w = solve_ridge(&f, &y, 1e-12).unwrap();
        assert!((w - exact).amax() < 1e-8);
    }

    #[test]
    fn nrmse_examples() {
        let t = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
        let shifted = t.map(|v| v + 0.3);
        assert!((nrmse(&shifted, &t).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            nrmse(&t, &DMatrix::from_element(4, 1, 2.0)),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn nrmse_hand_recomputation() {
        // target 1,2,3,4: mean 2.5, variance 1.25; errors 0.1,-0.2,0,0.3 -> mse 0.035
        let t = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let y = DMatrix::from_column_slice(4, 1, &[1.1, 1.8, 3.0, 4.3]);
        assert!((nrmse(&y, &t).unwrap() - (0.035f64 / 1.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn srr_examples() {
        let d = [1.0, -1.0, 1.0, 1.0];
        let u = [0.7, -1.4, 1.2, 0.6];
        assert_eq!(srr(&d, &d, &u, SrrNorm::L2).unwrap(), 1.0);
        assert_eq!(srr(&u, &d, &u, SrrNorm::L2).unwrap(), 0.0);
        assert_eq!(srr(&u, &d, &u, SrrNorm::L1).unwrap(), 0.0);
        assert!(matches!(srr(&d, &d, &d, SrrNorm::L2), Err(Error::SrrUndefined)));
        let y = [0.9, -1.0, 1.0, 1.0];
        // ||u-d||_2 = sqrt(0.09+0.16+0.04+0.16) = sqrt(0.45); ||y-d|| = 0.1
        assert!((srr(&y, &d, &u, SrrNorm::L2).unwrap() - (1.0 - 0.1 / 0.45f64.sqrt())).abs() < 1e-12);
        assert!((srr(&y, &d, &u, SrrNorm::L1).unwrap() - (1.0 - 0.1 / 1.3)).abs() < 1e-12);
    }

    #[test]
    fn ber_counts_sign_errors() {
        assert_eq!(
            bit_error_rate(&[0.5, -0.1, 0.2, -2.0], &[1.0, 1.0, 1.0, -1.0]).unwrap(),
            0.25
        );
    }

    #[test]
    fn readout_text_round_trip() {
        let r = Readout {
            weights: random(2, 7, 8),
            mode: FeatureMode::BiasInputState,
        };
        assert_eq!(Readout::from_text(&r.to_text()).unwrap(), r);
    }

    proptest! {
        #[test]
        fn larger_lambda_shrinks_weights(seed in 0u64..5000, l1 in 1e-6f64..1.0, factor in 1.1f64..100.0) {
            let f = random(5, 60, seed);
            let y = random(1, 60, seed + 1);
            let a = solve_ridge(&f, &y, l1).unwrap().norm();
            let b = solve_ridge(&f, &y, l1 * factor).unwrap().norm();
            prop_assert!(a >= b * (1.0 - 1e-12));
        }

        #[test]
        fn srr_never_exceeds_one(seed in 0u64..5000) {
            let mut r = RngState::new(seed);
            let d: Vec<f64> = (0..20).map(|_| r.uniform(-1.0, 1.0)).collect();
            let u: Vec<f64> = d.iter().map(|v| v + r.uniform(-0.5, 0.5)).collect();
            let y: Vec<f64> = (0..20).map(|_| r.uniform(-3.0, 3.0)).collect();
            prop_assert!(srr(&y, &d, &u, SrrNorm::L2).unwrap() <= 1.0);
            prop_assert_eq!(srr(&d, &d, &u, SrrNorm::L2).unwrap(), 1.0);
        }
    }
}
