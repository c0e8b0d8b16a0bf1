//! Gauss collocation grids in the random variable `z` and expectations over them.
//!
//! Weights are probability weights: the density of `z` is folded into them, so
//! an expectation is a plain weighted sum and the weights of every grid sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of each component of the random variable `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on `[-1, 1]`, Gauss–Legendre rule.
    Uniform,
    /// Standard normal, probabilists' Gauss–Hermite rule.
    StandardNormal,
}

impl Distribution {
    /// Probability density of one component.
    pub fn density(self, z: f64) -> f64 {
        match self {
            Distribution::Uniform => {
                if z.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Distribution::StandardNormal => {
                (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }

    /// `E[z^m]` for one component.
    pub fn moment(self, m: u32) -> f64 {
        if m % 2 == 1 {
            return 0.0;
        }
        match self {
            Distribution::Uniform => 1.0 / (m as f64 + 1.0),
            // (m-1)!!
            Distribution::StandardNormal => (1..m).step_by(2).map(|k| k as f64).product(),
        }
    }

    /// Squared off-diagonal of the Jacobi matrix of the monic orthogonal
    /// polynomials, `b_k` for `k >= 1`.
    fn recurrence_b(self, k: usize) -> f64 {
        let k = k as f64;
        match self {
            Distribution::Uniform => k * k / (4.0 * k * k - 1.0),
            Distribution::StandardNormal => k,
        }
    }
}

/// Which stage of the multi-level pipeline a grid serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// Packet-parameter ODEs.
    M1,
    /// `w` propagation.
    M2,
    /// Reconstruction of the wave function.
    M3,
    /// Reference (direct splitting) solves.
    M4,
    /// Error evaluation (always identical to M3 here).
    M5,
}

/// Quadrature nodes and probability weights, 1-D or a 2-D tensor product.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationGrid {
    dim: usize,
    dist: Distribution,
    level: Option<Level>,
    axis_nodes: Vec<f64>,
    axis_weights: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Build a Gauss grid with `n_per_axis` points along each of `dim` axes.
pub fn build_grid(dist: Distribution, n_per_axis: usize, dim: usize) -> Result<CollocationGrid> {
    if n_per_axis == 0 {
        return Err(Error::invalid(
            "a collocation grid needs at least one node per axis",
        ));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid(format!(
            "random dimension must be 1 or 2, got {dim}"
        )));
    }
    let (axis_nodes, axis_weights) = gauss_rule(dist, n_per_axis)?;
    let (nodes, weights) = if dim == 1 {
        (axis_nodes.clone(), axis_weights.clone())
    } else {
        let n = n_per_axis;
        let mut nodes = Vec::with_capacity(2 * n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                nodes.push(axis_nodes[i]);
                nodes.push(axis_nodes[j]);
                weights.push(axis_weights[i] * axis_weights[j]);
            }
        }
        (nodes, weights)
    };
    Ok(CollocationGrid {
        dim,
        dist,
        level: None,
        axis_nodes,
        axis_weights,
        nodes,
        weights,
    })
}

impl CollocationGrid {
    pub fn with_level(mut self, level: Level) -> Self {
        self.level = Some(level);
        self
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    pub fn dist(&self) -> Distribution {
        self.dist
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of collocation nodes (`n_per_axis^dim`).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn n_per_axis(&self) -> usize {
        self.axis_nodes.len()
    }

    /// Coordinates of node `k` (length `dim`).
    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    /// Node coordinates for a 1-D grid; `None` for tensor grids.
    pub fn points_1d(&self) -> Option<&[f64]> {
        (self.dim == 1).then_some(self.nodes.as_slice())
    }

    /// Same distribution, dimension and nodes.
    pub fn same_nodes(&self, other: &CollocationGrid) -> bool {
        self.dim == other.dim && self.dist == other.dist && self.nodes == other.nodes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// `Σ_k values_k ν_k`.
pub fn expect(values: &[f64], grid: &CollocationGrid) -> Result<f64> {
    grid.check_len(values.len())?;
    Ok(values.iter().zip(grid.weights()).map(|(v, w)| v * w).sum())
}

/// `E[v²] - E[v]²`, clamped at zero.
pub fn variance(values: &[f64], grid: &CollocationGrid) -> Result<f64> {
    let mean = expect(values, grid)?;
    Ok(values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| (v - mean).powi(2) * w)
        .sum())
}

pub fn sd(values: &[f64], grid: &CollocationGrid) -> Result<f64> {
    variance(values, grid).map(f64::sqrt)
}

/// Nodes and probability weights of the `n`-point Gauss rule for `dist`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix (Golub–Welsch), are
/// polished by Newton steps on the orthonormal polynomial, and the weights are
/// evaluated from the Christoffel function `1 / Σ_k p_k(x)²`.
pub fn gauss_rule(dist: Distribution, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("Gauss rule needs n >= 1"));
    }
    let sqrt_b: Vec<f64> = (0..=n)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                dist.recurrence_b(k).sqrt()
            }
        })
        .collect();

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    off[..n - 1].copy_from_slice(&sqrt_b[1..n]);
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);
    let mut nodes = diag;

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = orthonormal_and_derivative(&sqrt_b, n, *x);
            if !(p.is_finite() && dp.is_finite()) || dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }

    // exact symmetry about zero
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let r = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -r;
        nodes[j] = r;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let mut prev = 0.0;
            let mut cur = 1.0;
            let mut sum = 1.0;
            for k in 0..n - 1 {
                let next = (x * cur - sqrt_b[k] * prev) / sqrt_b[k + 1];
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((nodes, weights))
}

/// Orthonormal polynomial `p_n(x)` and its derivative from the three-term recurrence.
fn orthonormal_and_derivative(sqrt_b: &[f64], n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let p_next = (x * p - sqrt_b[k] * p_prev) / sqrt_b[k + 1];
        let d_next = (p + x * d - sqrt_b[k] * d_prev) / sqrt_b[k + 1];
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method.
///
/// `diag` is overwritten with the (unsorted) eigenvalues; `off[i]` couples rows
/// `i` and `i + 1` and is destroyed.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::invalid("tridiagonal QL iteration did not converge"));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_rules() {
        for dist in [Distribution::Uniform, Distribution::StandardNormal] {
            let g = build_grid(dist, 1, 1).unwrap();
            assert_eq!(g.node(0), &[0.0]);
            assert_eq!(g.weights(), &[1.0]);
        }
    }

    #[test]
    fn two_point_legendre() {
        let g = build_grid(Distribution::Uniform, 2, 1).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((g.node(0)[0] + x).abs() < 1e-15);
        assert!((g.node(1)[0] - x).abs() < 1e-15);
        assert!((g.weights()[0] - 0.5).abs() < 1e-15);
        assert!((g.weights()[1] - 0.5).abs() < 1e-15);
        assert!((g.node(0)[0] + 0.5773502692).abs() < 1e-10);
    }

    #[test]
    fn three_point_hermite_matches_closed_form() {
        // probabilists' He_3 = z^3 - 3z: nodes 0, ±√3, weights 2/3, 1/6
        let g = build_grid(Distribution::StandardNormal, 3, 1).unwrap();
        let r = 3f64.sqrt();
        assert!((g.node(0)[0] + r).abs() < 1e-14);
        assert_eq!(g.node(1)[0], 0.0);
        assert!((g.weights()[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((g.weights()[0] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(Distribution::Uniform, 0, 1).is_err());
        assert!(build_grid(Distribution::Uniform, 4, 3).is_err());
        assert!(build_grid(Distribution::Uniform, 4, 0).is_err());
    }

    #[test]
    fn expect_length_mismatch_is_error() {
        let g = build_grid(Distribution::Uniform, 4, 1).unwrap();
        assert!(matches!(
            expect(&[1.0; 3], &g),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(variance(&[1.0; 5], &g).is_err());
    }

    #[test]
    fn analytic_moments_and_variance() {
        let u = build_grid(Distribution::Uniform, 5, 1).unwrap();
        let n = build_grid(Distribution::StandardNormal, 5, 1).unwrap();
        let z2 = |g: &CollocationGrid| g.iter().map(|(z, _)| z[0] * z[0]).collect::<Vec<_>>();
        let z1 = |g: &CollocationGrid| g.iter().map(|(z, _)| z[0]).collect::<Vec<_>>();
        assert!((expect(&z2(&u), &u).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((expect(&z2(&n), &n).unwrap() - 1.0).abs() < 1e-12);
        assert!((variance(&z1(&u), &u).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((variance(&z1(&n), &n).unwrap() - 1.0).abs() < 1e-12);
        assert!(variance(&[2.5; 5], &u).unwrap() < 1e-28);
        assert!(sd(&[2.5; 5], &n).unwrap() < 1e-14);
        assert!((expect(&[7.0; 5], &n).unwrap() - 7.0).abs() < 1e-14);
    }

    #[test]
    fn exactness_up_to_degree_2n_minus_1() {
        for dist in [Distribution::Uniform, Distribution::StandardNormal] {
            for n in [1usize, 2, 3, 6, 11, 20] {
                let g = build_grid(dist, n, 1).unwrap();
                for m in 0..(2 * n as u32) {
                    let vals: Vec<f64> = g.iter().map(|(z, _)| z[0].powi(m as i32)).collect();
                    let exact = dist.moment(m);
                    let got = expect(&vals, &g).unwrap();
                    let scale = dist.moment(m + m % 2).max(1.0);
                    assert!(
                        (got - exact).abs() <= 1e-12 * scale,
                        "{dist:?} n={n} m={m}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn large_rules_are_well_formed() {
        for (dist, n) in [
            (Distribution::Uniform, 500),
            (Distribution::StandardNormal, 200),
        ] {
            let g = build_grid(dist, n, 1).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let x = g.points_1d().unwrap();
            assert!(x.windows(2).all(|w| w[0] < w[1]));
            assert!(g.weights().iter().all(|&w| w > 0.0));
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
            }
            if dist == Distribution::Uniform {
                assert!(x[0] > -1.0 && x[n - 1] < 1.0);
            }
            // second moment still exact at large n
            let v: Vec<f64> = x.iter().map(|z| z * z).collect();
            assert!((expect(&v, &g).unwrap() - dist.moment(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_grid_weights_are_products() {
        let g = build_grid(Distribution::Uniform, 4, 2).unwrap();
        assert_eq!(g.len(), 16);
        let aw = g.axis_weights().to_vec();
        for i in 0..4 {
            for j in 0..4 {
                let k = i * 4 + j;
                assert!((g.weights()[k] - aw[i] * aw[j]).abs() < 1e-16);
                assert_eq!(g.node(k), &[g.axis_nodes()[i], g.axis_nodes()[j]]);
            }
        }
        let s: f64 = g.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let v: Vec<f64> = g.iter().map(|(z, _)| z[0] * z[0] * z[1] * z[1]).collect();
        assert!((expect(&v, &g).unwrap() - 1.0 / 9.0).abs() < 1e-12);
    }
}
