//! Mackey-Glass delay differential equation
//! `dx/dt = beta x(t - tau) / (1 + x(t - tau)^n) - gamma x(t)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MGParams {
    pub beta: f64,
    pub gamma: f64,
    pub n_exp: f64,
    pub tau_delay: f64,
    /// Integration step.
    pub dt: f64,
    /// Constant history for `t <= 0`.
    pub x0: f64,
    /// Integration steps per returned sample.
    pub sample_every: usize,
}

impl Default for MGParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            n_exp: 10.0,
            tau_delay: 17.0,
            dt: 0.1,
            x0: 1.2,
            sample_every: 10,
        }
    }
}

impl MGParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("Mackey-Glass dt must be > 0"));
        }
        if !(self.tau_delay > 0.0 && self.tau_delay.is_finite()) {
            return Err(Error::domain("Mackey-Glass tau_delay must be > 0"));
        }
        // the delayed argument of every Runge-Kutta stage must lie in the past
        if self.tau_delay < self.dt {
            return Err(Error::domain("Mackey-Glass tau_delay must be >= dt"));
        }
        if self.sample_every == 0 {
            return Err(Error::domain("sample_every must be >= 1"));
        }
        if ![self.beta, self.gamma, self.n_exp, self.x0]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::domain("Mackey-Glass parameters must be finite"));
        }
        Ok(())
    }

    /// Nonzero equilibrium `(beta/gamma - 1)^(1/n)`, when it exists.
    pub fn fixed_point(&self) -> Option<f64> {
        let ratio = self.beta / self.gamma;
        (ratio > 1.0).then(|| (ratio - 1.0).powf(1.0 / self.n_exp))
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        self.beta * delayed / (1.0 + delayed.powf(self.n_exp)) - self.gamma * x
    }
}

/// Grid history covering the last `tau` time units, with the constant
/// initial history before `t = 0`.
struct History {
    dt: f64,
    x0: f64,
    /// absolute grid index of `values[0]`
    first: usize,
    values: VecDeque<f64>,
    capacity: usize,
}

impl History {
    fn new(p: &MGParams) -> Self {
        let capacity = (p.tau_delay / p.dt).ceil() as usize + 3;
        let mut values = VecDeque::with_capacity(capacity);
        values.push_back(p.x0);
        Self {
            dt: p.dt,
            x0: p.x0,
            first: 0,
            values,
            capacity,
        }
    }

    fn push(&mut self, x: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
            self.first += 1;
        }
        self.values.push_back(x);
    }

    /// Linear interpolation at time `t`.
    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.x0;
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let get = |k: usize| -> f64 {
            debug_assert!(k >= self.first, "history lookup before the ring buffer");
            self.values[k - self.first]
        };
        let last = self.first + self.values.len() - 1;
        if i >= last {
            return get(last);
        }
        if frac == 0.0 {
            return get(i);
        }
        (1.0 - frac) * get(i) + frac * get(i + 1)
    }
}

/// Integrates with classical fourth-order Runge-Kutta and returns `steps`
/// samples `x(k * sample_every * dt)`, starting with `x(0) = x0`.
pub fn mackey_glass(p: &MGParams, steps: usize) -> Result<Vec<f64>> {
    p.validate()?;
    if steps == 0 {
        return Err(Error::domain("Mackey-Glass needs at least one sample"));
    }
    let mut hist = History::new(p);
    let mut out = Vec::with_capacity(steps);
    out.push(p.x0);
    let (dt, tau) = (p.dt, p.tau_delay);
    let mut x = p.x0;
    let mut k: usize = 0;
    while out.len() < steps {
        let t = k as f64 * dt;
        let d0 = hist.at(t - tau);
        let dh = hist.at(t + 0.5 * dt - tau);
        let d1 = hist.at(t + dt - tau);
        let k1 = p.rhs(x, d0);
        let k2 = p.rhs(x + 0.5 * dt * k1, dh);
        let k3 = p.rhs(x + 0.5 * dt * k2, dh);
        let k4 = p.rhs(x + dt * k3, d1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(Error::NonFinite("Mackey-Glass integration"));
        }
        k += 1;
        hist.push(x);
        if k.is_multiple_of(p.sample_every) {
            out.push(x);
        }
    }
    Ok(out)
}
