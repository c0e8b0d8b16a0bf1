//! Classical limit: Hamilton flow per node and the induced position and
//! current densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{spline_fit_with, EndCondition, Spline1D};
use crate::packet::AffineZ;
use crate::potential::Potential;
use crate::quadrature::{expect, variance, CollocationGrid, Distribution};
use crate::spectral::PeriodicGrid;

/// `|∂q/∂z|` at or below this marks a caustic.
pub const CAUSTIC_SLOPE: f64 = 1e-6;
/// Histogram bins aggregate this many x cells.
pub const HISTOGRAM_CELLS: usize = 32;
/// Minimum size of the fine z grid used for root finding.
pub const FINE_Z_POINTS: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Roots of `q(t,z) = x` weighted by `π(z)/|∂q/∂z|`.
    Derivative,
    /// Weighted histogram of node positions.
    #[default]
    Histogram,
}

/// RK4 on `q̇ = p, ṗ = -V_x` for every node, up to `T`.
pub fn hamilton_integrate(
    grid: &CollocationGrid,
    v: &Potential,
    q0: &AffineZ,
    p0: &AffineZ,
    dt: f64,
    t_final: f64,
) -> Result<Vec<ClassicalState>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let n = if t_final == 0.0 {
        0
    } else {
        (t_final / dt - 1e-9).ceil().max(1.0) as usize
    };
    let h = if n == 0 { 0.0 } else { t_final / n as f64 };
    Ok(grid
        .iter()
        .map(|(z, _)| {
            let f = |q: f64, p: f64| (p, -v.dx(q, z));
            let (mut q, mut p) = (q0.eval(z), p0.eval(z));
            for _ in 0..n {
                let k1 = f(q, p);
                let k2 = f(q + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
                let k3 = f(q + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
                let k4 = f(q + h * k3.0, p + h * k3.1);
                q += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
            ClassicalState { q, p }
        })
        .collect())
}

/// A classical profile on an x grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalProfile {
    pub estimator: Estimator,
    pub values: Vec<f64>,
    /// Cells where the derivative form hit a caustic and the histogram was used.
    pub caustic_cells: Vec<usize>,
}

impl ClassicalProfile {
    pub fn integral(&self, xgrid: &PeriodicGrid) -> f64 {
        self.values.iter().sum::<f64>() * xgrid.dx()
    }
}

pub fn classical_density(
    states: &[ClassicalState],
    grid: &CollocationGrid,
    xgrid: &PeriodicGrid,
    est: Estimator,
) -> Result<ClassicalProfile> {
    profile(states, grid, xgrid, est, false)
}

/// Same estimators weighted by the momentum of each trajectory.
pub fn classical_current(
    states: &[ClassicalState],
    grid: &CollocationGrid,
    xgrid: &PeriodicGrid,
    est: Estimator,
) -> Result<ClassicalProfile> {
    profile(states, grid, xgrid, est, true)
}

fn profile(
    states: &[ClassicalState],
    grid: &CollocationGrid,
    xgrid: &PeriodicGrid,
    est: Estimator,
    current: bool,
) -> Result<ClassicalProfile> {
    if states.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: states.len(),
        });
    }
    let hist = histogram(states, grid, xgrid, current);
    match est {
        Estimator::Histogram => Ok(ClassicalProfile {
            estimator: est,
            values: hist,
            caustic_cells: Vec::new(),
        }),
        Estimator::Derivative => {
            let (mut values, caustic) = derivative_form(states, grid, xgrid, current)?;
            for &c in &caustic {
                values[c] = hist[c];
            }
            Ok(ClassicalProfile {
                estimator: est,
                values,
                caustic_cells: caustic,
            })
        }
    }
}

fn histogram(
    states: &[ClassicalState],
    grid: &CollocationGrid,
    xgrid: &PeriodicGrid,
    current: bool,
) -> Vec<f64> {
    let nb = xgrid.n.div_ceil(HISTOGRAM_CELLS);
    let width = HISTOGRAM_CELLS as f64 * xgrid.dx();
    let mut bins = vec![0.0; nb];
    for (s, w) in states.iter().zip(grid.weights()) {
        let x = s.q - xgrid.len() * ((s.q - xgrid.min) / xgrid.len()).floor();
        let cell = (((x - xgrid.min) / xgrid.dx()).floor() as usize).min(xgrid.n - 1);
        bins[cell / HISTOGRAM_CELLS] += w * if current { s.p } else { 1.0 };
    }
    (0..xgrid.n)
        .map(|j| bins[j / HISTOGRAM_CELLS] / width)
        .collect()
}

fn z_support(grid: &CollocationGrid, zs: &[f64]) -> (f64, f64) {
    match grid.dist() {
        Distribution::Uniform => (-1.0, 1.0),
        Distribution::StandardNormal => (zs[0].max(-8.0), zs[zs.len() - 1].min(8.0)),
    }
}

fn derivative_form(
    states: &[ClassicalState],
    grid: &CollocationGrid,
    xgrid: &PeriodicGrid,
    current: bool,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let zs = grid
        .points_1d()
        .ok_or_else(|| Error::invalid("classical density needs a 1-D z grid"))?;
    if zs.len() < 4 {
        return Err(Error::invalid(
            "derivative estimator needs at least 4 nodes",
        ));
    }
    let qs: Vec<f64> = states.iter().map(|s| s.q).collect();
    let ps: Vec<f64> = states.iter().map(|s| s.p).collect();
    let qspl = spline_fit_with(zs, &qs, EndCondition::NotAKnot)?;
    let pspl = spline_fit_with(zs, &ps, EndCondition::NotAKnot)?;
    let (lo, hi) = z_support(grid, zs);
    let nf = FINE_Z_POINTS.max(4 * zs.len());
    let fine: Vec<f64> = (0..=nf)
        .map(|i| lo + (hi - lo) * i as f64 / nf as f64)
        .collect();
    let qf: Vec<f64> = fine.iter().map(|&z| qspl.eval(z)).collect();
    let dist = grid.dist();
    let period = xgrid.len();
    let dx = xgrid.dx();
    let mut values = vec![0.0; xgrid.n];
    let mut caustic = Vec::new();
    for i in 0..nf {
        let (qa, qb) = (qf[i], qf[i + 1]);
        let (qmin, qmax) = (qa.min(qb), qa.max(qb));
        // x targets (including periodic images) with qa <= x < qb or reversed
        let m_lo = ((qmin - xgrid.max) / period).floor() as i64;
        let m_hi = ((qmax - xgrid.min) / period).ceil() as i64;
        for m in m_lo..=m_hi {
            let shift = m as f64 * period;
            let j_lo = ((qmin - shift - xgrid.min) / dx).ceil().max(0.0) as usize;
            let j_hi = (((qmax - shift - xgrid.min) / dx).ceil().max(0.0) as usize).min(xgrid.n);
            #[allow(clippy::needless_range_loop)]
            for j in j_lo..j_hi {
                let x = xgrid.min + j as f64 * dx + shift;
                if !(qmin <= x && x < qmax) {
                    continue;
                }
                let z = bisect(&qspl, x, fine[i], fine[i + 1]);
                let slope = qspl.derivative(z).abs();
                if slope <= CAUSTIC_SLOPE {
                    caustic.push(j);
                    continue;
                }
                let weight = if current { pspl.eval(z) } else { 1.0 };
                values[j] += weight * dist.density(z) / slope;
            }
        }
    }
    caustic.sort_unstable();
    caustic.dedup();
    Ok((values, caustic))
}

fn bisect(s: &Spline1D<f64>, x: f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = s.eval(a) - x;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = s.eval(m) - x;
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMoments {
    pub mean_q: f64,
    pub var_q: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

pub fn classical_moments(
    states: &[ClassicalState],
    grid: &CollocationGrid,
) -> Result<ClassicalMoments> {
    let q: Vec<f64> = states.iter().map(|s| s.q).collect();
    let p: Vec<f64> = states.iter().map(|s| s.p).collect();
    Ok(ClassicalMoments {
        mean_q: expect(&q, grid)?,
        var_q: variance(&q, grid)?,
        mean_p: expect(&p, grid)?,
        var_p: variance(&p, grid)?,
    })
}

/// `Σ|a - b| Δx`
pub fn l1_distance(a: &[f64], b: &[f64], xgrid: &PeriodicGrid) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * xgrid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;
    use std::f64::consts::PI;

    fn states_from(grid: &CollocationGrid, f: impl Fn(f64) -> (f64, f64)) -> Vec<ClassicalState> {
        grid.points_1d()
            .unwrap()
            .iter()
            .map(|&z| {
                let (q, p) = f(z);
                ClassicalState { q, p }
            })
            .collect()
    }

    #[test]
    fn linear_maps_give_flat_densities() {
        let grid = build_grid(Distribution::Uniform, 64, 1).unwrap();
        let x = PeriodicGrid::new(-PI, PI, 1024).unwrap();
        for (slope, level) in [(1.0, 0.5), (2.0, 0.25)] {
            let st = states_from(&grid, |z| (slope * z, 0.0));
            let d = classical_density(&st, &grid, &x, Estimator::Derivative).unwrap();
            for (j, xv) in x.points().into_iter().enumerate() {
                if xv.abs() < slope - 0.01 {
                    assert!(
                        (d.values[j] - level).abs() < 1e-10,
                        "x={xv}: {}",
                        d.values[j]
                    );
                } else if xv.abs() > slope + 0.01 {
                    assert_eq!(d.values[j], 0.0);
                }
            }
            assert!((d.integral(&x) - 1.0).abs() < 1e-2);
            let h = classical_density(&st, &grid, &x, Estimator::Histogram).unwrap();
            assert!((h.integral(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn current_follows_momentum() {
        let grid = build_grid(Distribution::Uniform, 64, 1).unwrap();
        let x = PeriodicGrid::new(-PI, PI, 512).unwrap();
        let st = states_from(&grid, |z| (z, 0.8));
        let d = classical_density(&st, &grid, &x, Estimator::Derivative).unwrap();
        let j = classical_current(&st, &grid, &x, Estimator::Derivative).unwrap();
        for (a, b) in j.values.iter().zip(&d.values) {
            assert!((a - 0.8 * b).abs() < 1e-12);
        }
        let still = states_from(&grid, |z| (z, 0.0));
        let j0 = classical_current(&still, &grid, &x, Estimator::Histogram).unwrap();
        assert!(j0.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn estimators_agree_for_harmonic_flow() {
        let grid = build_grid(Distribution::Uniform, 400, 1).unwrap();
        let x = PeriodicGrid::new(-PI, PI, 2048).unwrap();
        let v = Potential::harmonic(1.0, vec![]);
        let st = hamilton_integrate(
            &grid,
            &v,
            &AffineZ::new(PI / 2.0, vec![0.25 * PI]),
            &AffineZ::constant(0.0),
            2.5e-4,
            0.5,
        )
        .unwrap();
        let d = classical_density(&st, &grid, &x, Estimator::Derivative).unwrap();
        let h = classical_density(&st, &grid, &x, Estimator::Histogram).unwrap();
        let l1 = l1_distance(&d.values, &h.values, &x).unwrap();
        assert!(l1 < 0.1, "L1 between estimators {l1}");
        let (lo, hi) = st
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), s| (a.min(s.q), b.max(s.q)));
        let bin = |j: usize| j / HISTOGRAM_CELLS;
        let inside = |j: usize| {
            let (a, b) = (
                x.point(bin(j) * HISTOGRAM_CELLS),
                x.point((bin(j) + 1) * HISTOGRAM_CELLS - 1),
            );
            a > lo && b < hi
        };
        let binned = |v: &[f64]| -> Vec<f64> {
            let mut sums = vec![0.0; x.n.div_ceil(HISTOGRAM_CELLS)];
            for (j, val) in v.iter().enumerate() {
                sums[bin(j)] += val / HISTOGRAM_CELLS as f64;
            }
            (0..x.n)
                .filter(|&j| inside(j))
                .map(|j| sums[bin(j)])
                .collect()
        };
        let rel = |a: &[f64], b: &[f64]| {
            let (a, b) = (binned(a), binned(b));
            let scale: f64 = a.iter().map(|v| v.abs()).sum::<f64>() * x.dx();
            l1_distance(&a, &b, &x).unwrap() / scale
        };
        let interior = rel(&d.values, &h.values);
        assert!(interior < 0.02, "interior relative L1 {interior}");
        let jd = classical_current(&st, &grid, &x, Estimator::Derivative).unwrap();
        let jh = classical_current(&st, &grid, &x, Estimator::Histogram).unwrap();
        let jinterior = rel(&jd.values, &jh.values);
        assert!(jinterior < 0.02, "interior current relative L1 {jinterior}");
        assert!((d.integral(&x) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hamilton_flow_checks() {
        let grid = build_grid(Distribution::Uniform, 3, 1).unwrap();
        let free = hamilton_integrate(
            &grid,
            &Potential::free(),
            &AffineZ::new(0.1, vec![1.0]),
            &AffineZ::constant(0.5),
            1e-3,
            1.0,
        )
        .unwrap();
        for (s, &z) in free.iter().zip(grid.points_1d().unwrap()) {
            assert!((s.q - (0.1 + z + 0.5)).abs() < 1e-12);
        }
        let h = hamilton_integrate(
            &grid,
            &Potential::harmonic(1.0, vec![]),
            &AffineZ::constant(PI / 2.0),
            &AffineZ::constant(0.0),
            2.5e-4,
            1.0,
        )
        .unwrap();
        assert!((h[0].q - PI / 2.0 * 2f64.sqrt().cos()).abs() < 1e-10);
        assert_eq!(h[0], h[2]);
        let m = classical_moments(&h, &grid).unwrap();
        assert!(m.var_q.abs() < 1e-20);
        let lin = states_from(&build_grid(Distribution::Uniform, 4, 1).unwrap(), |z| {
            (z, 0.0)
        });
        let m = classical_moments(&lin, &build_grid(Distribution::Uniform, 4, 1).unwrap()).unwrap();
        assert!(m.mean_q.abs() < 1e-14 && (m.var_q - 1.0 / 3.0).abs() < 1e-12);
    }
}
