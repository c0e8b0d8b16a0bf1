//! Densities, currents, z-statistics, Γ-norms and the error metrics between
//! two solution sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{Deriv, EndCondition, SplineKnots};
use crate::quadrature::{expect, variance, CollocationGrid};
use crate::reconstruct::WaveField;
use crate::spectral::{spectral_derivative, FftPair};

/// Below this magnitude a denominator of a relative metric is treated as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

/// `|ψ|²`
pub fn density(psi: &WaveField) -> Vec<f64> {
    psi.values.iter().map(|v| v.norm_sqr()).collect()
}

/// Current evaluator with a cached transform of the field length.
#[derive(Debug)]
pub struct CurrentEvaluator {
    fft: FftPair,
}

impl CurrentEvaluator {
    pub fn new(n: usize) -> Self {
        CurrentEvaluator {
            fft: FftPair::new(n),
        }
    }

    /// `ε Im(ψ̄ ψ_x)` with a spectral derivative.
    pub fn current(&mut self, psi: &WaveField) -> Vec<f64> {
        if self.fft.len() != psi.values.len() {
            self.fft = FftPair::new(psi.values.len());
        }
        let d = spectral_derivative(&psi.grid, &mut self.fft, &psi.values);
        psi.values
            .iter()
            .zip(&d)
            .map(|(p, dp)| psi.eps * (p.conj() * dp).im)
            .collect()
    }

    /// `j̃ = Σ j Δx`
    pub fn jtilde(&mut self, psi: &WaveField) -> f64 {
        self.current(psi).iter().sum::<f64>() * psi.grid.dx()
    }
}

pub fn current(psi: &WaveField) -> Vec<f64> {
    CurrentEvaluator::new(psi.values.len()).current(psi)
}

pub fn jtilde(psi: &WaveField) -> f64 {
    CurrentEvaluator::new(psi.values.len()).jtilde(psi)
}

/// `(⟨q⟩, ⟨p⟩)` normalized by the discrete mass.
pub fn expectation_values(psi: &WaveField) -> (f64, f64) {
    let dx = psi.grid.dx();
    let mass = psi.mass();
    let q = psi
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| psi.grid.point(j) * v.norm_sqr())
        .sum::<f64>()
        * dx
        / mass;
    let p = jtilde(psi) / mass;
    (q, p)
}

/// `√(Σ_k ν_k Σ_i |ψ_k(x_i)|² Δx)`
pub fn gamma_norm(fields: &[WaveField], grid: &CollocationGrid) -> Result<f64> {
    let masses: Vec<f64> = fields.iter().map(WaveField::mass).collect();
    Ok(expect(&masses, grid)?.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub name: String,
    /// One profile per node (length 1 for scalar observables).
    pub per_node: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub sd: Vec<f64>,
}

impl ObservableSeries {
    pub fn scalar(name: &str, values: &[f64], grid: &CollocationGrid) -> Result<Self> {
        let per_node: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        stats(name, per_node, grid)
    }
}

/// Pointwise mean, variance and SD across nodes.
pub fn stats(
    name: &str,
    per_node: Vec<Vec<f64>>,
    grid: &CollocationGrid,
) -> Result<ObservableSeries> {
    if per_node.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: per_node.len(),
        });
    }
    let m = per_node.first().map_or(0, Vec::len);
    if let Some(bad) = per_node.iter().find(|p| p.len() != m) {
        return Err(Error::LengthMismatch {
            expected: m,
            got: bad.len(),
        });
    }
    let mut mean = Vec::with_capacity(m);
    let mut var = Vec::with_capacity(m);
    let mut col = vec![0.0; per_node.len()];
    for i in 0..m {
        for (c, p) in col.iter_mut().zip(&per_node) {
            *c = p[i];
        }
        mean.push(expect(&col, grid)?);
        var.push(variance(&col, grid)?);
    }
    let sd = var.iter().map(|v| v.sqrt()).collect();
    Ok(ObservableSeries {
        name: name.to_string(),
        per_node,
        mean,
        var,
        sd,
    })
}

/// Weighted `Σ_k ν_k Σ_i |a_k - b_k|² Δx` and `Σ_k ν_k Σ_i |b_k|² Δx`.
pub fn gamma_diff_parts(
    a: &[WaveField],
    b: &[WaveField],
    grid: &CollocationGrid,
) -> Result<(f64, f64)> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: a.len().min(b.len()),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((fa, fb), w) in a.iter().zip(b).zip(grid.weights()) {
        if fa.grid != fb.grid {
            return Err(Error::invalid(
                "error metric needs fields on a common x grid",
            ));
        }
        let dx = fa.grid.dx();
        num += w
            * fa.values
                .iter()
                .zip(&fb.values)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
            * dx;
        den += w * fb.values.iter().map(|y| y.norm_sqr()).sum::<f64>() * dx;
    }
    Ok((num, den))
}

/// `‖ψ_G - ψ_D‖_Γ / ‖ψ_D‖_Γ`
pub fn er_psi(gwpt: &[WaveField], ds: &[WaveField], grid: &CollocationGrid) -> Result<f64> {
    let (num, den) = gamma_diff_parts(gwpt, ds, grid)?;
    if den == 0.0 {
        return Err(Error::invalid("reference fields have zero Γ-norm"));
    }
    Ok((num / den).sqrt())
}

/// Errors in the mean and SD of `j̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JErrors {
    pub er1: f64,
    pub er2: f64,
    /// `er1` is absolute because `|E(j̃_D)|` was below the floor.
    pub er1_absolute: bool,
    /// `er2` is absolute because `SD(j̃_D)` was below the floor.
    pub er2_absolute: bool,
}

pub fn er_j(j_gwpt: &[f64], j_ds: &[f64], grid: &CollocationGrid) -> Result<JErrors> {
    if j_gwpt.len() != j_ds.len() {
        return Err(Error::LengthMismatch {
            expected: j_ds.len(),
            got: j_gwpt.len(),
        });
    }
    let diff: Vec<f64> = j_gwpt.iter().zip(j_ds).map(|(g, d)| g - d).collect();
    let e_diff = expect(&diff, grid)?;
    let sd_diff = variance(&diff, grid)?.sqrt();
    let e_ref = expect(j_ds, grid)?;
    let sd_ref = variance(j_ds, grid)?.sqrt();
    let (er1, er1_absolute) = if e_ref.abs() < DENOMINATOR_FLOOR {
        (e_diff.abs(), true)
    } else {
        ((e_diff / e_ref).abs(), false)
    };
    let (er2, er2_absolute) = if sd_ref < DENOMINATOR_FLOOR {
        (sd_diff, true)
    } else {
        (sd_diff / sd_ref, false)
    };
    Ok(JErrors {
        er1,
        er2,
        er1_absolute,
        er2_absolute,
    })
}

/// `max |∂_z^order Re f|` over all spatial samples and nodes, with the
/// z-derivative taken from a spline through the node values.
pub fn z_derivative_max(
    fields: &[&[Complex64]],
    grid: &CollocationGrid,
    order: u8,
    end: EndCondition,
) -> Result<f64> {
    let zs = grid
        .points_1d()
        .ok_or_else(|| Error::invalid("z-derivative diagnostic needs a 1-D grid"))?;
    if zs.len() < 8 {
        return Err(Error::invalid(format!(
            "z-derivative diagnostic needs at least 8 nodes, got {}",
            zs.len()
        )));
    }
    if fields.len() != zs.len() {
        return Err(Error::LengthMismatch {
            expected: zs.len(),
            got: fields.len(),
        });
    }
    let deriv = match order {
        1 => Deriv::First,
        2 => Deriv::Second,
        _ => return Err(Error::invalid("derivative order must be 1 or 2")),
    };
    let m = fields[0].len();
    if let Some(f) = fields.iter().find(|f| f.len() != m) {
        return Err(Error::LengthMismatch {
            expected: m,
            got: f.len(),
        });
    }
    let knots = SplineKnots::new(zs, end)?;
    let stencils: Vec<_> = zs.iter().map(|&z| knots.stencil(z, deriv)).collect();
    let mut col = vec![0.0; zs.len()];
    let mut second = vec![0.0; zs.len()];
    let mut best: f64 = 0.0;
    for i in 0..m {
        for (c, f) in col.iter_mut().zip(fields) {
            *c = f[i].re;
        }
        knots.second_derivatives_into(&col, &mut second);
        for s in &stencils {
            best = best.max(s.apply(&col, &second).abs());
        }
    }
    Ok(best)
}
