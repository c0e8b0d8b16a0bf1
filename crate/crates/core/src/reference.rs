//! Direct Strang time-splitting spectral solver for `ψ` itself.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::CollocationGrid;
use crate::reconstruct::WaveField;
use crate::spectral::{FftPair, PeriodicGrid};

/// Split-step propagator for one node; phase tables are built once.
#[derive(Debug)]
pub struct DsStepper {
    grid: PeriodicGrid,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    fft: FftPair,
}

impl DsStepper {
    pub fn new(grid: &PeriodicGrid, v: &Potential, z: &[f64], eps: f64, dt: f64) -> Self {
        let half_potential = grid
            .points()
            .into_iter()
            .map(|x| Complex64::from_polar(1.0, -v.value(x, z) * dt / (2.0 * eps)))
            .collect();
        let scale = 1.0 / grid.n as f64;
        let kinetic = grid
            .wavenumbers()
            .into_iter()
            .map(|k| Complex64::from_polar(scale, -eps * k * k * dt / 2.0))
            .collect();
        DsStepper {
            grid: *grid,
            half_potential,
            kinetic,
            fft: FftPair::new(grid.n),
        }
    }

    pub fn step(&mut self, psi: &mut [Complex64]) {
        for (p, h) in psi.iter_mut().zip(&self.half_potential) {
            *p *= h;
        }
        self.fft.forward(psi);
        for (p, k) in psi.iter_mut().zip(&self.kinetic) {
            *p *= k;
        }
        self.fft.inverse(psi);
        for (p, h) in psi.iter_mut().zip(&self.half_potential) {
            *p *= h;
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
}

/// A single split step.
pub fn ds_step(psi: &WaveField, v: &Potential, z: &[f64], eps: f64, dt: f64) -> WaveField {
    let mut out = psi.clone();
    DsStepper::new(&psi.grid, v, z, eps, dt).step(&mut out.values);
    out.time += dt;
    out
}

/// Number of reference steps covering `T` with steps no larger than `dt`.
pub fn ds_step_count(t_final: f64, dt: f64) -> usize {
    if t_final == 0.0 {
        0
    } else {
        (t_final / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Evolve every node's initial field to `T`.
pub fn ds_solve(
    psi0: &[WaveField],
    grid: &CollocationGrid,
    v: &Potential,
    eps: f64,
    dt: f64,
    t_final: f64,
) -> Result<Vec<WaveField>> {
    if psi0.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: psi0.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("reference time step must be positive"));
    }
    if let Some(first) = psi0.first() {
        if psi0.iter().any(|p| p.grid != first.grid) {
            return Err(Error::invalid("all reference nodes must share the x grid"));
        }
    }
    let n = ds_step_count(t_final, dt);
    let h = if n == 0 { 0.0 } else { t_final / n as f64 };
    Ok(psi0
        .par_iter()
        .enumerate()
        .map(|(k, p0)| {
            let mut psi = p0.clone();
            if n > 0 {
                let mut st = DsStepper::new(&p0.grid, v, grid.node(k), eps, h);
                for _ in 0..n {
                    st.step(&mut psi.values);
                }
            }
            psi.time = t_final;
            psi
        })
        .collect())
}
