//! Packet parameter ODEs `(q, p, α, γ, B)` per collocation node and the
//! potential remainder that couples them to `w`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{EndCondition, NodeTransfer};
use crate::potential::Potential;
use crate::quadrature::CollocationGrid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub q: f64,
    pub p: f64,
    pub alpha: Complex64,
    pub gamma: Complex64,
    pub b: f64,
}

impl PacketParams {
    /// Initial packet with `γ = 0` and `B = √Im α`.
    pub fn initial(q: f64, p: f64, alpha: Complex64) -> Self {
        PacketParams {
            q,
            p,
            alpha,
            gamma: Complex64::default(),
            b: alpha.im.max(0.0).sqrt(),
        }
    }

    fn axpy(&self, h: f64, d: &PacketParams) -> PacketParams {
        PacketParams {
            q: self.q + h * d.q,
            p: self.p + h * d.p,
            alpha: self.alpha + d.alpha * h,
            gamma: self.gamma + d.gamma * h,
            b: self.b + h * d.b,
        }
    }

    /// Real components `(q, p, Re α, Im α, Re γ, Im γ, B)`.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.q,
            self.p,
            self.alpha.re,
            self.alpha.im,
            self.gamma.re,
            self.gamma.im,
            self.b,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        PacketParams {
            q: a[0],
            p: a[1],
            alpha: Complex64::new(a[2], a[3]),
            gamma: Complex64::new(a[4], a[5]),
            b: a[6],
        }
    }
}

/// `c₀ + Σ cᵢ zᵢ`
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineZ {
    pub constant: f64,
    #[serde(default)]
    pub slopes: Vec<f64>,
}

impl AffineZ {
    pub fn constant(c: f64) -> Self {
        AffineZ {
            constant: c,
            slopes: Vec::new(),
        }
    }

    pub fn new(constant: f64, slopes: Vec<f64>) -> Self {
        AffineZ { constant, slopes }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.slopes.iter().zip(z).map(|(c, zi)| c * zi).sum::<f64>()
    }
}

/// Random Gaussian initial data `A exp(i(α₀(x-q₀)² + p₀(x-q₀))/ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub q0: AffineZ,
    pub p0: AffineZ,
    /// `[Re α₀, Im α₀]`
    pub alpha0: Complex64,
}

impl InitialSpec {
    pub fn params(&self, z: &[f64]) -> PacketParams {
        PacketParams::initial(self.q0.eval(z), self.p0.eval(z), self.alpha0)
    }

    /// L²-normalizing amplitude `(2 Im α₀ / (πε))^{1/4}`.
    pub fn amplitude(&self, eps: f64) -> f64 {
        (2.0 * self.alpha0.im / (std::f64::consts::PI * eps)).powf(0.25)
    }
}

/// Right-hand side of the parameter system at one node.
pub fn packet_rhs(s: &PacketParams, v: &Potential, z: &[f64], eps: f64) -> PacketParams {
    let (val, vx, vxx) = v.derivs(s.q, z);
    let ar = s.alpha.re;
    PacketParams {
        q: s.p,
        p: -vx,
        alpha: s.alpha * s.alpha * -2.0 - 0.5 * vxx,
        gamma: Complex64::new(0.5 * s.p * s.p - val, eps * ar),
        b: -2.0 * s.b * ar,
    }
}

/// One classical RK4 step. Fails if `Im α` leaves the upper half-plane.
pub fn rk4_step(
    s: &PacketParams,
    v: &Potential,
    z: &[f64],
    eps: f64,
    dt: f64,
) -> Result<PacketParams> {
    let k1 = packet_rhs(s, v, z, eps);
    let k2 = packet_rhs(&s.axpy(0.5 * dt, &k1), v, z, eps);
    let k3 = packet_rhs(&s.axpy(0.5 * dt, &k2), v, z, eps);
    let k4 = packet_rhs(&s.axpy(dt, &k3), v, z, eps);
    let mut out = *s;
    let w = dt / 6.0;
    out = out
        .axpy(w, &k1)
        .axpy(2.0 * w, &k2)
        .axpy(2.0 * w, &k3)
        .axpy(w, &k4);
    if !(out.alpha.im > 0.0) || !out.q.is_finite() || !out.gamma.re.is_finite() {
        return Err(Error::BlowUp {
            node: 0,
            time: f64::NAN,
            im_alpha: out.alpha.im,
        });
    }
    Ok(out)
}

/// Time stepping shared by the ODE, `w` and reference stages.
///
/// `T` is covered by `n_w` equal `w` steps; each `w` step holds `ode_per_w`
/// (even) ODE steps. Trajectories are sampled every half `w` step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepping {
    pub t_final: f64,
    pub n_w: usize,
    pub ode_per_w: usize,
}

impl TimeStepping {
    /// Fails unless `dt_w / dt_ode` is an even integer. If `dt_w` does not
    /// divide `T`, both steps shrink by the same factor.
    pub fn new(t_final: f64, dt_w: f64, dt_ode: f64) -> Result<Self> {
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "final time must be finite and non-negative, got {t_final}"
            )));
        }
        if !(dt_w > 0.0 && dt_ode > 0.0) {
            return Err(Error::invalid("time steps must be positive"));
        }
        let ratio = dt_w / dt_ode;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio || m < 2.0 || m as usize % 2 != 0 {
            return Err(Error::invalid(format!(
                "dt_w / dt_ode must be an even integer >= 2, got {ratio}"
            )));
        }
        let n_w = if t_final == 0.0 {
            0
        } else {
            (t_final / dt_w - 1e-9).ceil().max(1.0) as usize
        };
        Ok(TimeStepping {
            t_final,
            n_w,
            ode_per_w: m as usize,
        })
    }

    pub fn dt_w(&self) -> f64 {
        if self.n_w == 0 {
            0.0
        } else {
            self.t_final / self.n_w as f64
        }
    }

    pub fn dt_ode(&self) -> f64 {
        self.dt_w() / self.ode_per_w as f64
    }

    pub fn n_samples(&self) -> usize {
        2 * self.n_w + 1
    }

    pub fn sample_time(&self, j: usize) -> f64 {
        if j == 2 * self.n_w {
            self.t_final
        } else {
            j as f64 * 0.5 * self.dt_w()
        }
    }
}

/// Packet parameters sampled at half `w` steps for every node of a grid.
#[derive(Clone, Debug)]
pub struct PacketTrajectory {
    times: Vec<f64>,
    n_nodes: usize,
    // node-major
    samples: Vec<PacketParams>,
}

impl PacketTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn at(&self, node: usize, j: usize) -> &PacketParams {
        &self.samples[node * self.times.len() + j]
    }

    pub fn node(&self, node: usize) -> &[PacketParams] {
        let n = self.times.len();
        &self.samples[node * n..(node + 1) * n]
    }

    pub fn final_params(&self) -> Vec<PacketParams> {
        (0..self.n_nodes)
            .map(|k| *self.at(k, self.times.len() - 1))
            .collect()
    }

    /// Spline every real component across nodes onto another grid.
    pub fn transfer(&self, transfer: &NodeTransfer) -> Result<PacketTrajectory> {
        if transfer.source_len() != self.n_nodes {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes,
                got: transfer.source_len(),
            });
        }
        let nt = self.times.len();
        let n_to = transfer.target_len();
        let mut samples = vec![PacketParams::default(); n_to * nt];
        let mut col = vec![0.0; self.n_nodes];
        let mut scratch = vec![0.0; self.n_nodes];
        let mut out = vec![0.0; n_to];
        for j in 0..nt {
            let mut comps = vec![[0.0; 7]; n_to];
            for c in 0..7 {
                for (k, v) in col.iter_mut().enumerate() {
                    *v = self.at(k, j).to_array()[c];
                }
                transfer.apply_into(&col, &mut scratch, &mut out);
                for (dst, &v) in comps.iter_mut().zip(&out) {
                    dst[c] = v;
                }
            }
            for (k, a) in comps.into_iter().enumerate() {
                samples[k * nt + j] = PacketParams::from_array(a);
            }
        }
        Ok(PacketTrajectory {
            times: self.times.clone(),
            n_nodes: n_to,
            samples,
        })
    }

    /// Transfer between grids; 2-D grids must coincide.
    pub fn transfer_to(
        &self,
        from: &CollocationGrid,
        to: &CollocationGrid,
        end: EndCondition,
    ) -> Result<PacketTrajectory> {
        let t = NodeTransfer::between(from, to, end)?;
        self.transfer(&t)
    }
}

/// Integrate every node of `grid` independently with RK4.
pub fn integrate_packets(
    grid: &CollocationGrid,
    v: &Potential,
    eps: f64,
    ics: &[PacketParams],
    stepping: &TimeStepping,
) -> Result<PacketTrajectory> {
    if ics.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: ics.len(),
        });
    }
    if let Some(k) = ics.iter().position(|s| !(s.alpha.im > 0.0)) {
        return Err(Error::BlowUp {
            node: k,
            time: 0.0,
            im_alpha: ics[k].alpha.im,
        });
    }
    let ns = stepping.n_samples();
    let half = stepping.ode_per_w / 2;
    let dt = stepping.dt_ode();
    let per_node: Vec<Result<Vec<PacketParams>>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let z = grid.node(k);
            let mut s = ics[k];
            let mut out = Vec::with_capacity(ns);
            out.push(s);
            for j in 1..ns {
                for i in 0..half {
                    s = rk4_step(&s, v, z, eps, dt).map_err(|e| match e {
                        Error::BlowUp { im_alpha, .. } => Error::BlowUp {
                            node: k,
                            time: ((j - 1) * half + i + 1) as f64 * dt,
                            im_alpha,
                        },
                        e => e,
                    })?;
                }
                out.push(s);
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::with_capacity(grid.len() * ns);
    for r in per_node {
        samples.extend(r?);
    }
    let times = (0..ns).map(|j| stepping.sample_time(j)).collect();
    Ok(PacketTrajectory {
        times,
        n_nodes: grid.len(),
        samples,
    })
}

/// `U_r` at `η` for a packet centred at `q` with scale `B`.
pub fn u_r_eval(v: &Potential, z: &[f64], q: f64, b: f64, eta: f64, eps: f64) -> f64 {
    v.remainder(q, eps.sqrt() * eta / b, z)
}
