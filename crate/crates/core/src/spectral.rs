//! Uniform periodic grids and the FFT plumbing shared by the `w` propagator,
//! the reference solver and the observables.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = min + j·dx`, `j = 0..n`, on `[min, max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl PeriodicGrid {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::invalid(format!(
                "periodic grid needs min < max, got [{min}, {max}]"
            )));
        }
        if n < 2 {
            return Err(Error::invalid("periodic grid needs at least 2 points"));
        }
        Ok(PeriodicGrid { min, max, n })
    }

    pub fn len(&self) -> f64 {
        self.max - self.min
    }

    pub fn dx(&self) -> f64 {
        self.len() / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        let dk = 2.0 * PI / self.len();
        (0..n)
            .map(|j| {
                if j < (n + 1) / 2 {
                    j as f64 * dk
                } else {
                    (j - n) as f64 * dk
                }
            })
            .collect()
    }

    /// Map a displacement to its nearest periodic image in `[-L/2, L/2)`.
    pub fn wrap(&self, d: f64) -> f64 {
        let l = self.len();
        d - l * (d / l + 0.5).floor()
    }
}

/// Forward/inverse FFT pair of one size with its scratch space.
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftPair {
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.len() == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len()).finish()
    }
}

/// Trigonometric interpolation of periodic samples onto a grid `factor` times finer.
///
/// The Nyquist coefficient of an even-length input is split evenly between
/// the two matching modes of the finer grid.
pub fn refine_periodic(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    if factor <= 1 {
        return values.to_vec();
    }
    let big = n * factor;
    let mut spec = values.to_vec();
    FftPair::new(n).forward(&mut spec);
    let mut out = vec![Complex64::default(); big];
    let half = n / 2;
    if n % 2 == 0 {
        out[..half].copy_from_slice(&spec[..half]);
        out[big - half + 1..].copy_from_slice(&spec[half + 1..]);
        out[half] = spec[half] * 0.5;
        out[big - half] = spec[half] * 0.5;
    } else {
        out[..=half].copy_from_slice(&spec[..=half]);
        out[big - half..].copy_from_slice(&spec[half + 1..]);
    }
    FftPair::new(big).inverse(&mut out);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Spectral derivative of periodic samples (Nyquist mode dropped).
pub fn spectral_derivative(
    grid: &PeriodicGrid,
    fft: &mut FftPair,
    values: &[Complex64],
) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    fft.forward(&mut buf);
    let k = grid.wavenumbers();
    let scale = 1.0 / n as f64;
    for (j, (b, kj)) in buf.iter_mut().zip(&k).enumerate() {
        if n % 2 == 0 && j == n / 2 {
            *b = Complex64::default();
        } else {
            *b *= Complex64::new(0.0, kj * scale);
        }
    }
    fft.inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_and_wrap() {
        let g = PeriodicGrid::new(-PI, PI, 8).unwrap();
        assert_eq!(
            g.wavenumbers(),
            vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]
        );
        assert!((g.wrap(3.5) - (3.5 - 2.0 * PI)).abs() < 1e-15);
        assert!((g.wrap(-0.2) + 0.2).abs() < 1e-15);
        assert!(PeriodicGrid::new(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn refinement_is_exact_for_band_limited_data() {
        let g = PeriodicGrid::new(0.0, 2.0 * PI, 16).unwrap();
        let f = |x: f64| Complex64::new((3.0 * x).cos() + 0.5, (2.0 * x).sin());
        let v: Vec<Complex64> = g.points().into_iter().map(f).collect();
        let r = refine_periodic(&v, 4);
        let fine = PeriodicGrid::new(0.0, 2.0 * PI, 64).unwrap();
        for (j, x) in fine.points().into_iter().enumerate() {
            assert!((r[j] - f(x)).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = PeriodicGrid::new(-PI, PI, 32).unwrap();
        let mut fft = FftPair::new(32);
        let v: Vec<Complex64> = g
            .points()
            .into_iter()
            .map(|x| Complex64::new(0.0, 5.0 * x).exp())
            .collect();
        let d = spectral_derivative(&g, &mut fft, &v);
        for (a, b) in d.iter().zip(&v) {
            assert!((a - b * Complex64::new(0.0, 5.0)).norm() < 1e-12);
        }
    }
}
