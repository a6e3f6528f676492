//! Programmable synapses as differential conductance pairs.
//!
//! A signed weight `w` is realized by two non-negative conductances, one on a
//! positive and one on a negative line; Kirchhoff summation at the neuron input
//! yields `i = (G+ - G-) v`. Quantization models a crossbar cell that can only
//! be programmed to a fixed number of evenly spaced conductance levels.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Default full-scale conductance, siemens (1 mS).
pub const DEFAULT_G_MAX: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ConductanceNetwork {
    pub g_plus: DMatrix<f64>,
    pub g_minus: DMatrix<f64>,
    /// Siemens per unit weight.
    pub g_scale: f64,
    pub g_max: f64,
}

impl ConductanceNetwork {
    pub fn nrows(&self) -> usize {
        self.g_plus.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.g_plus.ncols()
    }

    /// Net conductance matrix `G+ - G-`.
    pub fn net(&self) -> DMatrix<f64> {
        &self.g_plus - &self.g_minus
    }

    /// Signed weights recovered as `(G+ - G-) / g_scale`.
    pub fn weights(&self) -> DMatrix<f64> {
        self.net() / self.g_scale
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_plus.shape() != self.g_minus.shape() {
            return Err(Error::domain("g_plus and g_minus shapes differ"));
        }
        for (p, m) in self.g_plus.iter().zip(self.g_minus.iter()) {
            if !(*p >= 0.0 && *p <= self.g_max && *m >= 0.0 && *m <= self.g_max) {
                return Err(Error::domain("conductance outside [0, g_max]"));
            }
            if *p != 0.0 && *m != 0.0 {
                return Err(Error::domain("both lines of a differential pair are nonzero"));
            }
        }
        Ok(())
    }

    /// CSV with one line per cell: `row,col,g_plus,g_minus` in siemens.
    /// Values use the shortest round-trip representation so a reload is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# rows={} cols={} g_max={:?} g_scale={:?}",
            self.nrows(),
            self.ncols(),
            self.g_max,
            self.g_scale
        );
        out.push_str("row,col,g_plus,g_minus\n");
        for r in 0..self.nrows() {
            for c in 0..self.ncols() {
                let _ = writeln!(out, "{r},{c},{:?},{:?}", self.g_plus[(r, c)], self.g_minus[(r, c)]);
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Parse("missing conductance metadata line".into()))?;
        let mut rows = None;
        let mut cols = None;
        let mut g_max = None;
        let mut g_scale = None;
        for kv in meta.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata field {kv}")))?;
            let bad = |_| Error::Parse(format!("bad value for {k}: {v}"));
            match k {
                "rows" => rows = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "cols" => cols = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "g_max" => g_max = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "g_scale" => g_scale = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(Error::Parse(format!("unknown metadata field {k}"))),
            }
        }
        let (rows, cols, g_max, g_scale) = match (rows, cols, g_max, g_scale) {
            (Some(r), Some(c), Some(m), Some(s)) => (r, c, m, s),
            _ => return Err(Error::Parse("incomplete conductance metadata".into())),
        };
        if lines.next() != Some("row,col,g_plus,g_minus") {
            return Err(Error::Parse("missing conductance CSV header".into()));
        }
        let mut g_plus = DMatrix::zeros(rows, cols);
        let mut g_minus = DMatrix::zeros(rows, cols);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields: {line}")));
            }
            let parse_idx = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
            let parse_val = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            let (r, c) = (parse_idx(f[0])?, parse_idx(f[1])?);
            if r >= rows || c >= cols {
                return Err(Error::Parse(format!("cell ({r},{c}) out of range")));
            }
            g_plus[(r, c)] = parse_val(f[2])?;
            g_minus[(r, c)] = parse_val(f[3])?;
        }
        let net = Self {
            g_plus,
            g_minus,
            g_scale,
            g_max,
        };
        net.validate()?;
        Ok(net)
    }
}

/// Maps signed weights onto a differential pair scaled so the largest
/// magnitude uses the full conductance `g_max`.
///
/// An all-zero matrix maps to the zero network with `g_scale = g_max`
/// (unit weight at full scale).
pub fn weights_to_conductances(w: &DMatrix<f64>, g_max: f64) -> Result<ConductanceNetwork> {
    if !(g_max > 0.0 && g_max.is_finite()) {
        return Err(Error::domain("g_max must be finite and > 0"));
    }
    let w_max = w.amax();
    if !w_max.is_finite() {
        return Err(Error::DegenerateScale);
    }
    let g_scale = if w_max == 0.0 { g_max } else { g_max / w_max };
    let g_plus = w.map(|x| if x > 0.0 { (x * g_scale).min(g_max) } else { 0.0 });
    let g_minus = w.map(|x| if x < 0.0 { (-x * g_scale).min(g_max) } else { 0.0 });
    Ok(ConductanceNetwork {
        g_plus,
        g_minus,
        g_scale,
        g_max,
    })
}

/// Snaps every conductance to the nearest of `levels` evenly spaced values in `[0, g_max]`.
pub fn quantize(net: &ConductanceNetwork, levels: usize) -> Result<ConductanceNetwork> {
    if levels < 2 {
        return Err(Error::domain(format!("levels must be >= 2, got {levels}")));
    }
    let step = net.g_max / (levels - 1) as f64;
    let top = (levels - 1) as f64;
    let snap = |g: f64| {
        let k = (g / step).round().clamp(0.0, top);
        if k == top {
            net.g_max
        } else {
            k * step
        }
    };
    Ok(ConductanceNetwork {
        g_plus: net.g_plus.map(snap),
        g_minus: net.g_minus.map(snap),
        g_scale: net.g_scale,
        g_max: net.g_max,
    })
}

/// Kirchhoff current summation `i = (G+ - G-) v`, amperes.
pub fn input_currents(net: &ConductanceNetwork, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("input_currents voltage vector", net.ncols(), v.len())?;
    Ok(&net.g_plus * v - &net.g_minus * v)
}
