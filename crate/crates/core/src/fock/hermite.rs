use serde::{Deserialize, Serialize};

use super::C64;
use crate::error::{Error, Result};

/// Uniform grid `start, start + step, ..` with `len` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// `len` points spanning `[start, stop]` inclusive.
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Domain(format!(
                "bad grid [{start}, {stop}] with {len} points"
            )));
        }
        Ok(Self {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn centered(center: f64, half_width: f64, len: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, len)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn stop(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }
}

/// Fills `out[k]` with the oscillator eigenfunction `<x|k>` for `k < out.len()`.
///
/// Uses the normalized three-term recurrence, which stays finite for large
/// orders where the bare Hermite polynomials overflow.
pub fn hermite_functions(x: f64, hbar: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let xi = x / hbar.sqrt();
    out[0] = (std::f64::consts::PI * hbar).powf(-0.25) * (-0.5 * xi * xi).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * xi * out[0];
    }
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Row-major table: entry `[j * n + k]` is `<x_j|k>`.
pub fn hermite_table(n: usize, xs: &[f64], hbar: f64) -> Vec<f64> {
    let mut table = vec![0.0; n * xs.len()];
    for (row, &x) in table.chunks_mut(n.max(1)).zip(xs) {
        hermite_functions(x, hbar, row);
    }
    table
}

/// `<q_theta|psi>` where `q_theta = x cos(theta) + p sin(theta)` and
/// `<q_theta|k> = exp(-i k theta) <x = q|k>`.
pub fn wavefunction(amps: &[C64], theta: f64, xs: &[f64], hbar: f64) -> Vec<C64> {
    let n = amps.len();
    let weighted: Vec<C64> = amps
        .iter()
        .enumerate()
        .map(|(k, &c)| c * C64::from_polar(1.0, -(k as f64) * theta))
        .collect();
    let mut h = vec![0.0; n];
    xs.iter()
        .map(|&x| {
            hermite_functions(x, hbar, &mut h);
            weighted.iter().zip(&h).map(|(c, &hk)| c * hk).sum()
        })
        .collect()
}
