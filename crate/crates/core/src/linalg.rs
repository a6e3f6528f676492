//! Spectral radius estimation for the recurrent weight matrix.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::rng::{streams, RngState};

pub const SPECTRAL_TOL: f64 = 1e-8;
pub const SPECTRAL_MAX_ITER: usize = 1000;
/// Width of the iterated subspace. Complex-conjugate and equal-magnitude
/// dominant eigenvalues all fall inside it, which plain single-vector power
/// iteration cannot resolve.
const BLOCK: usize = 16;
/// Convergence is judged on the change over this many iterations.
const WINDOW: usize = 10;
/// QR sweeps allowed per dense eigenvalue solve.
const SCHUR_MAX_ITER: usize = 10_000;
/// Random orthogonal similarities tried when the QR sweep stalls.
const SCHUR_RETRIES: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out; `radius` is then the best estimate.
    pub converged: bool,
}

/// Largest eigenvalue magnitude of a square matrix by block power
/// (orthogonal subspace) iteration with Rayleigh-Ritz extraction.
pub fn spectral_radius(w: &DMatrix<f64>) -> Result<SpectralEstimate> {
    spectral_radius_with(w, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

pub fn spectral_radius_with(w: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::domain(format!(
            "spectral radius needs a square matrix, got {}x{}",
            n,
            w.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::domain("spectral radius of an empty matrix"));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("spectral_radius input"));
    }
    if w.amax() == 0.0 || pattern_is_acyclic(w) {
        // an acyclic nonzero pattern is nilpotent
        return Ok(SpectralEstimate {
            radius: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let p = n.min(BLOCK);
    if p == n {
        // the subspace is the whole space; one Ritz step is exact
        return Ok(SpectralEstimate {
            radius: max_abs_eigenvalue(w)?,
            iterations: 1,
            converged: true,
        });
    }

    let mut rng = RngState::with_stream(0, streams::SPECTRAL);
    let start = DMatrix::from_fn(n, p, |_, _| rng.uniform(-1.0, 1.0));
    let mut q = start.qr().q();
    let mut history: Vec<f64> = Vec::with_capacity(max_iter);
    for it in 1..=max_iter {
        let z = w * &q;
        let h = q.transpose() * &z;
        let est = max_abs_eigenvalue(&h)?;
        history.push(est);
        if it > WINDOW {
            let old = history[it - 1 - WINDOW];
            if (est - old).abs() <= tol * est.max(f64::MIN_POSITIVE) {
                return Ok(SpectralEstimate {
                    radius: est,
                    iterations: it,
                    converged: true,
                });
            }
        }
        let scale = z.norm();
        if scale == 0.0 || !scale.is_finite() {
            // nilpotent on the current subspace
            return Ok(SpectralEstimate {
                radius: 0.0,
                iterations: it,
                converged: scale == 0.0,
            });
        }
        q = (z / scale).qr().q();
    }
    Ok(SpectralEstimate {
        radius: *history.last().expect("at least one iteration"),
        iterations: max_iter,
        converged: false,
    })
}

/// Whether the directed graph with an edge `i -> j` per nonzero `w[i][j]`
/// has no cycle (Kahn's algorithm).
pub fn pattern_is_acyclic(w: &DMatrix<f64>) -> bool {
    let n = w.nrows();
    let mut indegree = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if w[(i, j)] != 0.0 {
                indegree[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    let mut removed = 0;
    while let Some(i) = ready.pop() {
        removed += 1;
        for j in 0..n {
            if w[(i, j)] != 0.0 {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    removed == n
}

fn max_abs_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let modulus =
        |schur: Schur<f64, nalgebra::Dyn>| schur.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        return Ok(modulus(s));
    }
    // a similarity with a random orthogonal matrix keeps the spectrum and
    // moves the QR sweep off the stalled structure
    let n = m.nrows();
    for attempt in 0..SCHUR_RETRIES {
        let mut rng = RngState::with_stream(attempt, streams::SPECTRAL + 1);
        let q = DMatrix::from_fn(n, n, |_, _| rng.normal()).qr().q();
        let rotated = q.transpose() * m * &q;
        if let Some(s) = Schur::try_new(rotated, f64::EPSILON, SCHUR_MAX_ITER) {
            return Ok(modulus(s));
        }
    }
    Err(Error::NonFinite("eigenvalue iteration (no convergence)"))
}
