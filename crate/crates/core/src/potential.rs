//! Random potentials `V(x, z) = s(z)·f(x)` with an affine strength
//! `s(z) = c₀ + Σ cᵢ zᵢ` and a spatial profile `f` with hand-coded derivatives.

use serde::{Deserialize, Serialize};

/// Spatial profile of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `f ≡ 0`
    Free,
    /// `f = x²`
    Harmonic,
    /// `f = 1 - cos x`
    Cosine,
}

/// Coarse classification used for reporting and oracle eligibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Free,
    QuadraticRandom,
    QuadraticDeterministic,
    CosineRandom,
    CosineDeterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub shape: Shape,
    pub constant: f64,
    #[serde(default)]
    pub slopes: Vec<f64>,
}

impl Potential {
    pub fn new(shape: Shape, constant: f64, slopes: Vec<f64>) -> Self {
        Potential {
            shape,
            constant,
            slopes,
        }
    }

    pub fn free() -> Self {
        Potential::new(Shape::Free, 0.0, Vec::new())
    }

    pub fn harmonic(constant: f64, slopes: Vec<f64>) -> Self {
        Potential::new(Shape::Harmonic, constant, slopes)
    }

    pub fn cosine(constant: f64, slopes: Vec<f64>) -> Self {
        Potential::new(Shape::Cosine, constant, slopes)
    }

    pub fn kind(&self) -> PotentialKind {
        let random = !self.is_z_independent();
        match (self.shape, random) {
            (Shape::Free, _) => PotentialKind::Free,
            (Shape::Harmonic, true) => PotentialKind::QuadraticRandom,
            (Shape::Harmonic, false) => PotentialKind::QuadraticDeterministic,
            (Shape::Cosine, true) => PotentialKind::CosineRandom,
            (Shape::Cosine, false) => PotentialKind::CosineDeterministic,
        }
    }

    /// Quadratic in `x`: the Taylor remainder vanishes identically.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.shape, Shape::Free | Shape::Harmonic)
    }

    pub fn is_z_independent(&self) -> bool {
        self.shape == Shape::Free || self.slopes.iter().all(|&c| c == 0.0)
    }

    /// Number of random dimensions the potential reads.
    pub fn random_dim(&self) -> usize {
        self.slopes.len()
    }

    /// `s(z)`; components of `z` beyond the slopes are ignored.
    pub fn strength(&self, z: &[f64]) -> f64 {
        self.constant + self.slopes.iter().zip(z).map(|(c, zi)| c * zi).sum::<f64>()
    }

    pub fn value(&self, x: f64, z: &[f64]) -> f64 {
        self.derivs(x, z).0
    }

    pub fn dx(&self, x: f64, z: &[f64]) -> f64 {
        self.derivs(x, z).1
    }

    pub fn dxx(&self, x: f64, z: &[f64]) -> f64 {
        self.derivs(x, z).2
    }

    /// `(V, V_x, V_xx)` at `(x, z)`.
    pub fn derivs(&self, x: f64, z: &[f64]) -> (f64, f64, f64) {
        let s = self.strength(z);
        match self.shape {
            Shape::Free => (0.0, 0.0, 0.0),
            Shape::Harmonic => (s * x * x, 2.0 * s * x, 2.0 * s),
            Shape::Cosine => {
                let (sn, cs) = x.sin_cos();
                (s * (1.0 - cs), s * sn, s * cs)
            }
        }
    }

    /// Taylor remainder `V(q+d) - V(q) - d V_x(q) - d²/2 V_xx(q)`.
    ///
    /// Evaluated without cancellation for small `d`.
    pub fn remainder(&self, q: f64, d: f64, z: &[f64]) -> f64 {
        match self.shape {
            Shape::Free | Shape::Harmonic => 0.0,
            Shape::Cosine => {
                // cos q (1 - cos d - d²/2) + sin q (sin d - d)
                let s = self.strength(z);
                let (sq, cq) = q.sin_cos();
                s * (cq * one_minus_cos_minus_half_sq(d) + sq * sin_minus_identity(d))
            }
        }
    }
}

/// `1 - cos d - d²/2`
fn one_minus_cos_minus_half_sq(d: f64) -> f64 {
    if d.abs() > 0.5 {
        return 1.0 - d.cos() - 0.5 * d * d;
    }
    // -d⁴/4! + d⁶/6! - ...
    let d2 = d * d;
    let mut term = -d2 * d2 / 24.0;
    let mut sum = term;
    let mut k = 4.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= -d2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

/// `sin d - d`
fn sin_minus_identity(d: f64) -> f64 {
    if d.abs() > 0.5 {
        return d.sin() - d;
    }
    let d2 = d * d;
    let mut term = -d * d2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= -d2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-4;
        for v in [
            Potential::harmonic(1.0, vec![0.95]),
            Potential::cosine(1.0, vec![0.9]),
            Potential::cosine(1.0, vec![0.2, 0.7]),
        ] {
            for &x in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
                for z in [[-0.8, 0.1], [0.0, 0.0], [0.6, -0.9]] {
                    let fd1 = (v.value(x + h, &z) - v.value(x - h, &z)) / (2.0 * h);
                    let fd2 =
                        (v.value(x + h, &z) - 2.0 * v.value(x, &z) + v.value(x - h, &z)) / (h * h);
                    assert!((fd1 - v.dx(x, &z)).abs() < 1e-6);
                    assert!((fd2 - v.dxx(x, &z)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn strength_and_kinds() {
        let v = Potential::cosine(1.0, vec![0.2, 0.7]);
        assert!((v.strength(&[1.0, -1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(v.kind(), PotentialKind::CosineRandom);
        assert_eq!(
            Potential::cosine(1.0, vec![]).kind(),
            PotentialKind::CosineDeterministic
        );
        assert_eq!(
            Potential::harmonic(1.0, vec![0.95]).kind(),
            PotentialKind::QuadraticRandom
        );
        assert!(Potential::harmonic(1.0, vec![0.95]).is_quadratic());
        let a = Potential::harmonic(1.0, vec![0.95]);
        assert!((a.dx(1.0, &[-1.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn remainder_series_agrees_with_direct_formula() {
        let v = Potential::cosine(1.3, vec![]);
        for &q in &[0.0, 0.4, 1.5, -2.2] {
            for &d in &[0.45, 0.3, -0.2, 0.05] {
                let direct = v.value(q + d, &[])
                    - v.value(q, &[])
                    - d * v.dx(q, &[])
                    - 0.5 * d * d * v.dxx(q, &[]);
                let r = v.remainder(q, d, &[]);
                assert!((r - direct).abs() < 1e-13, "q={q} d={d}: {r} vs {direct}");
            }
        }
        assert_eq!(
            Potential::harmonic(3.0, vec![1.0]).remainder(0.3, 2.0, &[0.5]),
            0.0
        );
    }
}
