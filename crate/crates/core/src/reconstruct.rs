//! Reassembling `ψ` from `(w, q, p, α, γ, B)` and the closed-form Gaussian
//! solution for quadratic potentials.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{Deriv, EndCondition, SplineKnots};
use crate::packet::{InitialSpec, PacketParams, TimeStepping};
use crate::potential::Potential;
use crate::spectral::{refine_periodic, PeriodicGrid};
use crate::wprop::WField;

/// Refinement factor applied to `w` before spline sampling.
pub const DEFAULT_W_REFINE: usize = 32;

/// Cells of `w` grid kept clear of the box edge when sampling.
const EDGE_GUARD: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub grid: PeriodicGrid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub eps: f64,
}

impl WaveField {
    /// Discrete mass `Σ|ψ|²Δx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }
}

/// `w` resampled on a fine grid and splined, ready for point evaluation.
#[derive(Debug, Clone)]
pub struct WProfile {
    knots: Arc<SplineKnots>,
    values: Vec<Complex64>,
    second: Vec<Complex64>,
    limit: f64,
}

impl WProfile {
    /// Trigonometric refinement by `refine`, then a cubic spline through the
    /// fine samples (closed with the periodic image of the first point).
    pub fn new(w: &WField, refine: usize, end: EndCondition) -> Result<Self> {
        let refine = refine.max(1);
        let mut fine = refine_periodic(&w.values, refine);
        let n = fine.len();
        let dx = w.grid.len() / n as f64;
        let mut knots: Vec<f64> = (0..n).map(|j| w.grid.min + j as f64 * dx).collect();
        knots.push(w.grid.max);
        fine.push(fine[0]);
        let knots = SplineKnots::new(&knots, end)?;
        let second = knots.second_derivatives(&fine)?;
        let half = 0.5 * w.grid.len();
        let center = w.grid.min + half;
        let limit = half - EDGE_GUARD;
        debug_assert!(center.abs() < 1e-12, "eta box is expected to be centred");
        Ok(WProfile {
            knots,
            values: fine,
            second,
            limit,
        })
    }

    /// `w(η)`, taken as zero beyond the guarded support window.
    #[inline]
    pub fn eval(&self, eta: f64) -> Complex64 {
        if eta.abs() > self.limit {
            return Complex64::default();
        }
        self.knots
            .stencil(eta, Deriv::Value)
            .apply(&self.values, &self.second)
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }
}

/// `ψ(x) = w(Bξ/√ε) exp(i(Re α ξ² + pξ + γ)/ε)` with `ξ` the nearest periodic
/// image of `x - q`.
pub fn reconstruct_psi(
    w: &WProfile,
    s: &PacketParams,
    xgrid: &PeriodicGrid,
    eps: f64,
    time: f64,
) -> Result<WaveField> {
    if !(s.alpha.im > 0.0 && s.b > 0.0) {
        return Err(Error::invalid(format!(
            "degenerate packet: Im alpha = {}, B = {}",
            s.alpha.im, s.b
        )));
    }
    let mut values = vec![Complex64::default(); xgrid.n];
    fill_psi(w, s, xgrid, eps, &mut values);
    Ok(WaveField {
        grid: *xgrid,
        values,
        time,
        eps,
    })
}

pub(crate) fn fill_psi(
    w: &WProfile,
    s: &PacketParams,
    xgrid: &PeriodicGrid,
    eps: f64,
    out: &mut [Complex64],
) {
    let scale = s.b / eps.sqrt();
    let amp = (-s.gamma.im / eps).exp();
    let inv = 1.0 / eps;
    let dx = xgrid.dx();
    for (j, o) in out.iter_mut().enumerate() {
        let xi = xgrid.wrap(xgrid.min + j as f64 * dx - s.q);
        let eta = scale * xi;
        let wv = w.eval(eta);
        if wv == Complex64::default() {
            *o = wv;
            continue;
        }
        let phase = (s.alpha.re * xi * xi + s.p * xi + s.gamma.re) * inv;
        *o = wv * Complex64::from_polar(amp, phase);
    }
}

/// Fraction of `∫|w|²dη` lying where the reconstruction cannot place it
/// (η beyond the sampling window or ξ beyond half the x period).
pub fn lost_mass_fraction(w: &WField, s: &PacketParams, xgrid: &PeriodicGrid, eps: f64) -> f64 {
    let total: f64 = w.values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let reach = (s.b / eps.sqrt() * 0.5 * xgrid.len()).min(0.5 * w.grid.len() - EDGE_GUARD);
    let lost: f64 = w
        .grid
        .points()
        .iter()
        .zip(&w.values)
        .filter(|(e, _)| e.abs() > reach)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    lost / total
}

/// State of the complex-width Gaussian `exp(i(α(x-q)² + p(x-q) + γ)/ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HellerState {
    pub q: f64,
    pub p: f64,
    pub alpha: Complex64,
    pub gamma: Complex64,
}

impl HellerState {
    /// Normalized initial packet: `γ₀ = -iε ln A`.
    pub fn initial(spec: &InitialSpec, z: &[f64], eps: f64) -> Self {
        let a = spec.amplitude(eps);
        HellerState {
            q: spec.q0.eval(z),
            p: spec.p0.eval(z),
            alpha: spec.alpha0,
            gamma: Complex64::new(0.0, -eps * a.ln()),
        }
    }

    fn rhs(&self, v: &Potential, z: &[f64], eps: f64) -> HellerState {
        let (val, vx, vxx) = v.derivs(self.q, z);
        HellerState {
            q: self.p,
            p: -vx,
            alpha: self.alpha * self.alpha * -2.0 - 0.5 * vxx,
            gamma: Complex64::new(0.5 * self.p * self.p - val, 0.0)
                + Complex64::i() * self.alpha * eps,
        }
    }

    fn axpy(&self, h: f64, d: &HellerState) -> HellerState {
        HellerState {
            q: self.q + h * d.q,
            p: self.p + h * d.p,
            alpha: self.alpha + d.alpha * h,
            gamma: self.gamma + d.gamma * h,
        }
    }
}

/// RK4 on the complex-width system up to `stepping.t_final`.
pub fn heller_integrate(
    init: &HellerState,
    v: &Potential,
    z: &[f64],
    eps: f64,
    stepping: &TimeStepping,
) -> Result<HellerState> {
    if !v.is_quadratic() {
        return Err(Error::invalid(
            "the Gaussian closed form only solves quadratic potentials",
        ));
    }
    let dt = stepping.dt_ode();
    let mut s = *init;
    for _ in 0..stepping.n_w * stepping.ode_per_w {
        let k1 = s.rhs(v, z, eps);
        let k2 = s.axpy(0.5 * dt, &k1).rhs(v, z, eps);
        let k3 = s.axpy(0.5 * dt, &k2).rhs(v, z, eps);
        let k4 = s.axpy(dt, &k3).rhs(v, z, eps);
        s = s
            .axpy(dt / 6.0, &k1)
            .axpy(dt / 3.0, &k2)
            .axpy(dt / 3.0, &k3)
            .axpy(dt / 6.0, &k4);
    }
    Ok(s)
}

/// Evaluate the Gaussian on a periodic grid (nearest image of `x - q`).
pub fn heller_exact(s: &HellerState, xgrid: &PeriodicGrid, eps: f64, time: f64) -> WaveField {
    let values = xgrid
        .points()
        .into_iter()
        .map(|x| {
            let xi = xgrid.wrap(x - s.q);
            ((s.alpha * xi * xi + s.p * xi + s.gamma) * Complex64::i() / eps).exp()
        })
        .collect();
    WaveField {
        grid: *xgrid,
        values,
        time,
        eps,
    }
}

/// Initial `ψ` of a node: `A exp(i(α₀ξ² + p₀ξ)/ε)`.
pub fn initial_psi(spec: &InitialSpec, z: &[f64], xgrid: &PeriodicGrid, eps: f64) -> WaveField {
    heller_exact(&HellerState::initial(spec, z, eps), xgrid, eps, 0.0)
}

/// Relative discrete L² distance `‖a - b‖ / ‖b‖`.
pub fn relative_l2(a: &WaveField, b: &WaveField) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::LengthMismatch {
            expected: b.values.len(),
            got: a.values.len(),
        });
    }
    let num: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::AffineZ;
    use crate::wprop::{default_eta_grid, w_initial};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec() -> InitialSpec {
        InitialSpec {
            q0: AffineZ::constant(FRAC_PI_2),
            p0: AffineZ::constant(0.3),
            alpha0: Complex64::new(0.0, 1.0),
        }
    }

    #[test]
    fn round_trip_at_time_zero() {
        let x = PeriodicGrid::new(-PI, PI, 2048).unwrap();
        for eps in [1.0 / 32.0, 1.0 / 256.0] {
            let sp = spec();
            let w = w_initial(sp.amplitude(eps), &default_eta_grid()).unwrap();
            let prof = WProfile::new(&w, DEFAULT_W_REFINE, EndCondition::NotAKnot).unwrap();
            let psi = reconstruct_psi(&prof, &sp.params(&[]), &x, eps, 0.0).unwrap();
            let exact = initial_psi(&sp, &[], &x, eps);
            let err = psi
                .values
                .iter()
                .zip(&exact.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "eps {eps}: {err}");
            assert!((psi.mass() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn heller_initial_is_normalized() {
        let x = PeriodicGrid::new(-PI, PI, 4096).unwrap();
        let psi = initial_psi(&spec(), &[], &x, 1.0 / 128.0);
        assert!((psi.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn heller_refuses_cosine() {
        let st = TimeStepping::new(0.1, 0.01, 2.5e-4).unwrap();
        let h = HellerState::initial(&spec(), &[], 0.1);
        assert!(heller_integrate(&h, &Potential::cosine(1.0, vec![]), &[], 0.1, &st).is_err());
    }

    #[test]
    fn harmonic_half_period_mirrors_packet() {
        // V = x²: period π/√2, half period maps (q, p) to (-q, -p).
        let t = PI / 2f64.sqrt();
        let st = TimeStepping {
            t_final: t,
            n_w: 200,
            ode_per_w: 40,
        };
        let eps = 1.0 / 64.0;
        let sp = InitialSpec {
            p0: AffineZ::constant(0.0),
            ..spec()
        };
        let h = heller_integrate(
            &HellerState::initial(&sp, &[], eps),
            &Potential::harmonic(1.0, vec![]),
            &[],
            eps,
            &st,
        )
        .unwrap();
        assert!((h.q + FRAC_PI_2).abs() < 1e-10);
        assert!(h.p.abs() < 1e-10);
        let x = PeriodicGrid::new(-PI, PI, 4096).unwrap();
        assert!((heller_exact(&h, &x, eps, t).mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn phase_shift_changes_psi_by_global_factor() {
        let x = PeriodicGrid::new(-PI, PI, 1024).unwrap();
        let eps = 1.0 / 64.0;
        let mut h = HellerState::initial(&spec(), &[], eps);
        let a = heller_exact(&h, &x, eps, 0.0);
        let delta = 1e-4;
        h.gamma += delta;
        let b = heller_exact(&h, &x, eps, 0.0);
        let expect = (Complex64::from_polar(1.0, delta / eps) - 1.0).norm();
        assert!((relative_l2(&b, &a).unwrap() - expect).abs() < 1e-12);
    }
}
