//! Split-step propagation of the rescaled profile `w(t, η)`:
//! `w_t = (i/2) α_I w_ηη - 2i α_I η² w - (i/ε) U_r w` on a periodic η box.
//!
//! The quadratic part is `-i α_I(t) H₀` with the fixed oscillator
//! `H₀ = -½∂² + 2η²`, so over a step it is `exp(-iθH₀)` with `θ = ∫α_I`,
//! applied through the exact factorisation
//! `exp(-i tanθ η²) exp(-i sin2θ k²/4) exp(-i tanθ η²)`.
//! The remainder `U_r/ε` is Strang-split around it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{u_r_eval, PacketParams};
use crate::potential::Potential;
use crate::spectral::{FftPair, PeriodicGrid};

/// Relative size of `|w|` at the box edge that counts as escaped support.
pub const EDGE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WField {
    pub grid: PeriodicGrid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WField {
    /// Discrete `Σ|w|²Δη`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// `max |w|` over the outermost grid points relative to `max |w|`.
    pub fn edge_ratio(&self) -> f64 {
        let n = self.values.len();
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let edge = [0, 1, n - 2, n - 1]
            .iter()
            .map(|&j| self.values[j].norm())
            .fold(0.0, f64::max);
        edge / max
    }
}

/// Default η box `[-20, 20)` with 128 points.
pub fn default_eta_grid() -> PeriodicGrid {
    PeriodicGrid {
        min: -20.0,
        max: 20.0,
        n: 128,
    }
}

/// `A exp(-η²)`
pub fn w_initial(amplitude: f64, grid: &PeriodicGrid) -> Result<WField> {
    if !(amplitude > 0.0) {
        return Err(Error::invalid(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let values = grid
        .points()
        .into_iter()
        .map(|e| Complex64::new(amplitude * (-e * e).exp(), 0.0))
        .collect();
    Ok(WField {
        grid: *grid,
        values,
        time: 0.0,
    })
}

/// Coefficients of the `w` equation at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WCoeffs {
    pub alpha_i: f64,
    pub q: f64,
    pub b: f64,
}

impl From<&PacketParams> for WCoeffs {
    fn from(s: &PacketParams) -> Self {
        WCoeffs {
            alpha_i: s.alpha.im,
            q: s.q,
            b: s.b,
        }
    }
}

/// Reusable propagator for one η grid.
#[derive(Debug)]
pub struct WPropagator {
    grid: PeriodicGrid,
    eta: Vec<f64>,
    k2: Vec<f64>,
    fft: FftPair,
}

impl WPropagator {
    pub fn new(grid: &PeriodicGrid) -> Self {
        WPropagator {
            grid: *grid,
            eta: grid.points(),
            k2: grid.wavenumbers().into_iter().map(|k| k * k).collect(),
            fft: FftPair::new(grid.n),
        }
    }

    fn half_remainder(
        &self,
        w: &mut [Complex64],
        c: &WCoeffs,
        v: &Potential,
        z: &[f64],
        eps: f64,
        dt: f64,
    ) {
        if v.is_quadratic() {
            return;
        }
        for (wj, &e) in w.iter_mut().zip(&self.eta) {
            *wj *= Complex64::from_polar(1.0, -0.5 * dt * u_r_eval(v, z, c.q, c.b, e, eps) / eps);
        }
    }

    /// `exp(-iθH₀)`, applied in pieces with `|θ| ≤ π/16`.
    pub fn oscillator(&mut self, w: &mut [Complex64], theta: f64) {
        let pieces = (16.0 * theta.abs() / PI).ceil().max(1.0) as usize;
        let th = theta / pieces as f64;
        let (tan, sin2) = (th.tan(), (2.0 * th).sin());
        let scale = 1.0 / self.grid.n as f64;
        for _ in 0..pieces {
            for (wj, &e) in w.iter_mut().zip(&self.eta) {
                *wj *= Complex64::from_polar(1.0, -tan * e * e);
            }
            self.fft.forward(w);
            for (wj, &k2) in w.iter_mut().zip(&self.k2) {
                *wj *= Complex64::from_polar(scale, -0.25 * sin2 * k2);
            }
            self.fft.inverse(w);
            for (wj, &e) in w.iter_mut().zip(&self.eta) {
                *wj *= Complex64::from_polar(1.0, -tan * e * e);
            }
        }
    }

    /// One step from `t` to `t + dt` using coefficients at `t`, `t + dt/2`
    /// and `t + dt`; `∫α_I` over the step is taken by Simpson's rule.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        w: &mut WField,
        c0: &WCoeffs,
        cm: &WCoeffs,
        c1: &WCoeffs,
        v: &Potential,
        z: &[f64],
        eps: f64,
        dt: f64,
    ) -> Result<()> {
        if w.grid != self.grid {
            return Err(Error::invalid(
                "w field lives on a different grid than the propagator",
            ));
        }
        self.half_remainder(&mut w.values, c0, v, z, eps, dt);
        let theta = dt * (c0.alpha_i + 4.0 * cm.alpha_i + c1.alpha_i) / 6.0;
        self.oscillator(&mut w.values, theta);
        self.half_remainder(&mut w.values, c1, v, z, eps, dt);
        w.time += dt;
        let ratio = w.edge_ratio();
        if ratio > EDGE_TOLERANCE {
            return Err(Error::SupportEscaped {
                time: w.time,
                ratio,
            });
        }
        Ok(())
    }
}

/// Propagate through the samples of one node's trajectory (spaced `dt/2`).
///
/// Returns the field after every step listed in `record` (step counts,
/// `0` meaning the initial field) plus the final field last.
#[allow(clippy::too_many_arguments)]
pub fn propagate_w(
    w0: &WField,
    samples: &[PacketParams],
    times: &[f64],
    v: &Potential,
    z: &[f64],
    eps: f64,
    record: &[usize],
) -> Result<Vec<WField>> {
    if samples.len() != times.len() || samples.is_empty() || samples.len() % 2 == 0 {
        return Err(Error::invalid(
            "trajectory samples must be an odd-length list aligned with times",
        ));
    }
    let n_steps = (samples.len() - 1) / 2;
    let mut prop = WPropagator::new(&w0.grid);
    let mut w = w0.clone();
    let mut out = Vec::with_capacity(record.len() + 1);
    if record.contains(&0) {
        out.push(w.clone());
    }
    for s in 0..n_steps {
        let dt = times[2 * s + 2] - times[2 * s];
        let c0 = WCoeffs::from(&samples[2 * s]);
        let cm = WCoeffs::from(&samples[2 * s + 1]);
        let c1 = WCoeffs::from(&samples[2 * s + 2]);
        prop.step(&mut w, &c0, &cm, &c1, v, z, eps, dt)?;
        w.time = times[2 * s + 2];
        if record.contains(&(s + 1)) {
            out.push(w.clone());
        }
    }
    out.push(w);
    Ok(out)
}
