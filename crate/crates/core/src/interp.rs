//! Cubic splines for transfers between collocation grids and for sampling `w`.
//!
//! A spline is linear in its data, so every evaluation reduces to a four-term
//! stencil over the data values and the fitted second derivatives. The knot
//! system is factorized once per knot set and reused for every data vector
//! fitted on it, which is how the z-transfers of whole fields stay cheap.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::CollocationGrid;

/// Values a spline can carry. Complex data is interpolated componentwise.
pub trait SplineValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl SplineValue for f64 {}
impl SplineValue for Complex64 {}

/// End conditions of the cubic spline.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    /// Zero second derivative at both ends.
    Natural,
    /// Continuous third derivative at the second and second-to-last knots.
    #[default]
    NotAKnot,
}

/// Which quantity a stencil evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    Value,
    First,
    Second,
}

/// Knot set with its factorized second-derivative system.
#[derive(Debug)]
pub struct SplineKnots {
    knots: Vec<f64>,
    h: Vec<f64>,
    end: EndCondition,
    uniform: Option<(f64, f64)>,
    // Thomas factorization over the interior unknowns 1..n-1
    lower: Vec<f64>,
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl SplineKnots {
    pub fn new(knots: &[f64], end: EndCondition) -> Result<Arc<Self>> {
        let n = knots.len();
        if n < 4 {
            return Err(Error::invalid(format!(
                "a cubic spline needs at least 4 knots, got {n}"
            )));
        }
        if knots.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("spline knots must be finite"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let span = knots[n - 1] - knots[0];
        let h0 = span / (n - 1) as f64;
        let uniform = knots
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (knots[0] + i as f64 * h0)).abs() <= 1e-12 * span)
            .then_some((knots[0], h0));

        // interior rows i = 1..=n-2: h[i-1] M[i-1] + 2(h[i-1]+h[i]) M[i] + h[i] M[i+1]
        let m = n - 2;
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        let mut c = vec![0.0; m];
        for r in 0..m {
            let i = r + 1;
            a[r] = h[i - 1];
            b[r] = 2.0 * (h[i - 1] + h[i]);
            c[r] = h[i];
        }
        if end == EndCondition::NotAKnot {
            // M0 = (1 + h0/h1) M1 - (h0/h1) M2, likewise at the right end
            let (h0, h1) = (h[0], h[1]);
            b[0] += h0 + h0 * h0 / h1;
            c[0] -= h0 * h0 / h1;
            a[0] = 0.0;
            let (hl, hp) = (h[n - 2], h[n - 3]);
            b[m - 1] += hl + hl * hl / hp;
            a[m - 1] -= hl * hl / hp;
            c[m - 1] = 0.0;
        } else {
            a[0] = 0.0;
            c[m - 1] = 0.0;
        }
        let mut pivot = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for r in 0..m {
            let p = if r == 0 {
                b[0]
            } else {
                b[r] - a[r] * upper[r - 1]
            };
            if p.abs() < 1e-300 {
                return Err(Error::invalid("singular spline system"));
            }
            pivot[r] = p;
            upper[r] = c[r] / p;
        }
        Ok(Arc::new(SplineKnots {
            knots: knots.to_vec(),
            h,
            end,
            uniform,
            lower: a,
            upper,
            pivot,
        }))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn end_condition(&self) -> EndCondition {
        self.end
    }

    /// Second derivatives at the knots for data `ys`.
    pub fn second_derivatives<T: SplineValue>(&self, ys: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        if ys.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: ys.len(),
            });
        }
        let mut out = vec![T::default(); n];
        self.second_derivatives_into(ys, &mut out);
        Ok(out)
    }

    /// Unchecked variant writing into `out` (both of length `len()`).
    pub(crate) fn second_derivatives_into<T: SplineValue>(&self, ys: &[T], out: &mut [T]) {
        let n = self.len();
        let m = n - 2;
        let h = &self.h;
        let slope = |i: usize| (ys[i + 1] - ys[i]) * (1.0 / h[i]);
        // forward sweep into out[1..=m]
        for r in 0..m {
            let i = r + 1;
            let rhs = (slope(i) - slope(i - 1)) * 6.0;
            let v = if r == 0 {
                rhs
            } else {
                rhs - out[i - 1] * self.lower[r]
            };
            out[i] = v * (1.0 / self.pivot[r]);
        }
        for r in (0..m.saturating_sub(1)).rev() {
            let i = r + 1;
            out[i] = out[i] - out[i + 1] * self.upper[r];
        }
        match self.end {
            EndCondition::Natural => {
                out[0] = T::default();
                out[n - 1] = T::default();
            }
            EndCondition::NotAKnot => {
                let r0 = h[0] / h[1];
                out[0] = out[1] * (1.0 + r0) - out[2] * r0;
                let r1 = h[n - 2] / h[n - 3];
                out[n - 1] = out[n - 2] * (1.0 + r1) - out[n - 3] * r1;
            }
        }
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.len();
        if let Some((x0, h)) = self.uniform {
            let i = ((x - x0) / h).floor();
            return (i.max(0.0) as usize).min(n - 2);
        }
        let i = self.knots.partition_point(|&k| k <= x);
        i.saturating_sub(1).min(n - 2)
    }

    /// Linear stencil of the spline (or a derivative) at `x`.
    ///
    /// Outside the knot range the spline continues linearly with the end value
    /// and end slope.
    pub fn stencil(&self, x: f64, deriv: Deriv) -> Stencil {
        let n = self.len();
        let first = self.knots[0];
        let last = self.knots[n - 1];
        if x < first || x > last {
            let (i, h, d) = if x < first {
                (0, self.h[0], x - first)
            } else {
                (n - 2, self.h[n - 2], x - last)
            };
            // end slope: (y1-y0)/h - h(2M0+M1)/6 (left), (y1-y0)/h + h(M0+2M1)/6 (right)
            let (sy0, sy1) = (-1.0 / h, 1.0 / h);
            let (sm0, sm1) = if x < first {
                (-h / 3.0, -h / 6.0)
            } else {
                (h / 6.0, h / 3.0)
            };
            return match deriv {
                Deriv::Value => {
                    let base = if x < first { (1.0, 0.0) } else { (0.0, 1.0) };
                    Stencil {
                        i,
                        wy0: base.0 + d * sy0,
                        wy1: base.1 + d * sy1,
                        wm0: d * sm0,
                        wm1: d * sm1,
                    }
                }
                Deriv::First => Stencil {
                    i,
                    wy0: sy0,
                    wy1: sy1,
                    wm0: sm0,
                    wm1: sm1,
                },
                Deriv::Second => Stencil {
                    i,
                    wy0: 0.0,
                    wy1: 0.0,
                    wm0: 0.0,
                    wm1: 0.0,
                },
            };
        }
        let i = self.interval(x);
        let h = self.h[i];
        let a = (self.knots[i + 1] - x) / h;
        let b = 1.0 - a;
        match deriv {
            Deriv::Value => Stencil {
                i,
                wy0: a,
                wy1: b,
                wm0: (a * a * a - a) * h * h / 6.0,
                wm1: (b * b * b - b) * h * h / 6.0,
            },
            Deriv::First => Stencil {
                i,
                wy0: -1.0 / h,
                wy1: 1.0 / h,
                wm0: -(3.0 * a * a - 1.0) * h / 6.0,
                wm1: (3.0 * b * b - 1.0) * h / 6.0,
            },
            Deriv::Second => Stencil {
                i,
                wy0: 0.0,
                wy1: 0.0,
                wm0: a,
                wm1: b,
            },
        }
    }

    pub fn fit<T: SplineValue>(self: &Arc<Self>, ys: &[T]) -> Result<Spline1D<T>> {
        let m = self.second_derivatives(ys)?;
        Ok(Spline1D {
            knots: Arc::clone(self),
            values: ys.to_vec(),
            second: m,
        })
    }
}

/// Four-term linear evaluation rule on interval `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub i: usize,
    pub wy0: f64,
    pub wy1: f64,
    pub wm0: f64,
    pub wm1: f64,
}

impl Stencil {
    #[inline]
    pub fn apply<T: SplineValue>(&self, ys: &[T], second: &[T]) -> T {
        let i = self.i;
        ys[i] * self.wy0 + ys[i + 1] * self.wy1 + second[i] * self.wm0 + second[i + 1] * self.wm1
    }
}

/// A fitted cubic spline through `(knots, values)`.
#[derive(Clone, Debug)]
pub struct Spline1D<T> {
    knots: Arc<SplineKnots>,
    values: Vec<T>,
    second: Vec<T>,
}

/// Fit a spline with the default end condition.
pub fn spline_fit<T: SplineValue>(xs: &[f64], ys: &[T]) -> Result<Spline1D<T>> {
    spline_fit_with(xs, ys, EndCondition::default())
}

pub fn spline_fit_with<T: SplineValue>(
    xs: &[f64],
    ys: &[T],
    end: EndCondition,
) -> Result<Spline1D<T>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    SplineKnots::new(xs, end)?.fit(ys)
}

impl<T: SplineValue> Spline1D<T> {
    pub fn eval(&self, x: f64) -> T {
        self.knots
            .stencil(x, Deriv::Value)
            .apply(&self.values, &self.second)
    }

    pub fn derivative(&self, x: f64) -> T {
        self.knots
            .stencil(x, Deriv::First)
            .apply(&self.values, &self.second)
    }

    pub fn second_derivative(&self, x: f64) -> T {
        self.knots
            .stencil(x, Deriv::Second)
            .apply(&self.values, &self.second)
    }

    pub fn knots(&self) -> &[f64] {
        self.knots.knots()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Second derivatives at the knots.
    pub fn second_derivatives(&self) -> &[T] {
        &self.second
    }
}

pub fn spline_eval<T: SplineValue>(s: &Spline1D<T>, x: f64) -> T {
    s.eval(x)
}

pub fn spline_derivative<T: SplineValue>(s: &Spline1D<T>, x: f64) -> T {
    s.derivative(x)
}

/// Repeated spline transfer from one fixed knot set to fixed target points.
#[derive(Clone, Debug)]
pub struct SplineTransfer {
    knots: Arc<SplineKnots>,
    stencils: Vec<Stencil>,
}

impl SplineTransfer {
    pub fn new(from: &[f64], to: &[f64], end: EndCondition, deriv: Deriv) -> Result<Self> {
        let knots = SplineKnots::new(from, end)?;
        Ok(Self::from_knots(knots, to, deriv))
    }

    pub fn from_knots(knots: Arc<SplineKnots>, to: &[f64], deriv: Deriv) -> Self {
        let stencils = to.iter().map(|&x| knots.stencil(x, deriv)).collect();
        SplineTransfer { knots, stencils }
    }

    pub fn source_len(&self) -> usize {
        self.knots.len()
    }

    pub fn target_len(&self) -> usize {
        self.stencils.len()
    }

    pub fn apply<T: SplineValue>(&self, ys: &[T]) -> Result<Vec<T>> {
        let m = self.knots.second_derivatives(ys)?;
        Ok(self.stencils.iter().map(|s| s.apply(ys, &m)).collect())
    }

    /// Apply with caller-provided scratch for the second derivatives.
    pub(crate) fn apply_into<T: SplineValue>(&self, ys: &[T], scratch: &mut [T], out: &mut [T]) {
        self.knots.second_derivatives_into(ys, scratch);
        for (o, s) in out.iter_mut().zip(&self.stencils) {
            *o = s.apply(ys, scratch);
        }
    }
}

/// Transfer of node-aligned data between two 1-D collocation grids.
///
/// Fewer than four source nodes fall back to the interpolating polynomial
/// (constant, linear or quadratic), which is the degenerate limit of the
/// not-a-knot spline.
#[derive(Clone, Debug)]
pub enum NodeTransfer {
    Identity(usize),
    Spline(SplineTransfer),
    Polynomial {
        n_from: usize,
        weights: Vec<Vec<f64>>,
    },
}

impl NodeTransfer {
    pub fn new(from: &[f64], to: &[f64], end: EndCondition) -> Result<Self> {
        Self::with_deriv(from, to, end, Deriv::Value)
    }

    pub fn with_deriv(from: &[f64], to: &[f64], end: EndCondition, deriv: Deriv) -> Result<Self> {
        if from.is_empty() {
            return Err(Error::invalid("transfer needs at least one source node"));
        }
        if from.len() >= 4 {
            return Ok(NodeTransfer::Spline(SplineTransfer::new(
                from, to, end, deriv,
            )?));
        }
        if !from.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("source nodes must be strictly increasing"));
        }
        let weights = to
            .iter()
            .map(|&x| lagrange_weights(from, x, deriv))
            .collect();
        Ok(NodeTransfer::Polynomial {
            n_from: from.len(),
            weights,
        })
    }

    /// Transfer between grids; identical grids short-circuit to a copy.
    pub fn between(
        from: &CollocationGrid,
        to: &CollocationGrid,
        end: EndCondition,
    ) -> Result<Self> {
        if from.same_nodes(to) {
            return Ok(NodeTransfer::Identity(from.len()));
        }
        match (from.points_1d(), to.points_1d()) {
            (Some(a), Some(b)) => Self::new(a, b, end),
            _ => Err(Error::invalid(
                "2-D collocation grids cannot be interpolated; use identical grids",
            )),
        }
    }

    pub fn source_len(&self) -> usize {
        match self {
            NodeTransfer::Identity(n) => *n,
            NodeTransfer::Spline(s) => s.source_len(),
            NodeTransfer::Polynomial { n_from, .. } => *n_from,
        }
    }

    pub fn target_len(&self) -> usize {
        match self {
            NodeTransfer::Identity(n) => *n,
            NodeTransfer::Spline(s) => s.target_len(),
            NodeTransfer::Polynomial { weights, .. } => weights.len(),
        }
    }

    pub fn apply<T: SplineValue>(&self, ys: &[T]) -> Result<Vec<T>> {
        if ys.len() != self.source_len() {
            return Err(Error::LengthMismatch {
                expected: self.source_len(),
                got: ys.len(),
            });
        }
        let mut scratch = vec![T::default(); ys.len()];
        let mut out = vec![T::default(); self.target_len()];
        self.apply_into(ys, &mut scratch, &mut out);
        Ok(out)
    }

    /// Unchecked variant; `scratch` must have the source length.
    pub(crate) fn apply_into<T: SplineValue>(&self, ys: &[T], scratch: &mut [T], out: &mut [T]) {
        match self {
            NodeTransfer::Identity(_) => out.copy_from_slice(ys),
            NodeTransfer::Spline(s) => s.apply_into(ys, scratch, out),
            NodeTransfer::Polynomial { weights, .. } => {
                for (o, w) in out.iter_mut().zip(weights) {
                    *o = w
                        .iter()
                        .zip(ys)
                        .fold(T::default(), |acc, (&wi, &y)| acc + y * wi);
                }
            }
        }
    }
}

fn lagrange_weights(xs: &[f64], x: f64, deriv: Deriv) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let denom: f64 = (0..n).filter(|&j| j != i).map(|j| xs[i] - xs[j]).product();
            let others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| xs[j]).collect();
            let num = match (deriv, others.len()) {
                (Deriv::Value, _) => others.iter().map(|xj| x - xj).product(),
                (Deriv::First, 0) | (Deriv::Second, 0 | 1) => 0.0,
                (Deriv::First, 1) => 1.0,
                (Deriv::First, _) => (x - others[0]) + (x - others[1]),
                (Deriv::Second, _) => 2.0,
            };
            num / denom
        })
        .collect()
}
