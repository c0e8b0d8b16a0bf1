//! The multi-level collocation pipeline (M1 ODEs, M2 `w` solves, M3
//! reconstruction), the reference runs on M4 and their comparison on M5 = M3.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    classical_current, classical_density, classical_moments, hamilton_integrate, ClassicalMoments,
    ClassicalProfile, ClassicalState, Estimator,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::harness::config::{timing_mesh, ExperimentConfig};
use crate::interp::NodeTransfer;
use crate::observables::{er_j, er_psi, z_derivative_max, CurrentEvaluator, JErrors};
use crate::packet::{integrate_packets, PacketParams, PacketTrajectory};
use crate::quadrature::{build_grid, CollocationGrid, Level};
use crate::reconstruct::{
    heller_exact, heller_integrate, initial_psi, lost_mass_fraction, reconstruct_psi, HellerState,
    WProfile, WaveField,
};
use crate::reference::ds_solve;
use crate::wprop::{propagate_w, w_initial, WField};

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub ode: f64,
    pub wprop: f64,
    pub reconstruct: f64,
    pub reference: f64,
}

impl StageTimings {
    pub fn gwpt_total(&self) -> f64 {
        self.ode + self.wprop + self.reconstruct
    }
}

/// Collocation grid of one level for a configuration.
pub fn level_grid(cfg: &ExperimentConfig, level: Level) -> Result<CollocationGrid> {
    let n = match level {
        Level::M1 => cfg.nz1,
        Level::M2 => cfg.nz2,
        Level::M3 | Level::M5 => cfg.nz3,
        Level::M4 => cfg.nz4,
    };
    Ok(build_grid(cfg.z_dist, n, cfg.z_dim)?.with_level(level))
}

/// Everything the GWPT pipeline produces at the final time.
#[derive(Clone, Debug)]
pub struct GwptRun {
    pub m1: CollocationGrid,
    pub m2: CollocationGrid,
    pub m3: CollocationGrid,
    pub trajectory: PacketTrajectory,
    pub w_m2: Vec<WField>,
    pub params_m3: Vec<PacketParams>,
    pub w_m3: Vec<WField>,
    /// Reconstructed fields on M3, when requested.
    pub psi: Option<Vec<WaveField>>,
    /// Largest fraction of `|w|²` that fell outside the reconstruction window.
    pub max_lost_fraction: f64,
    pub timings: StageTimings,
}

impl GwptRun {
    pub fn psi(&self) -> Result<&[WaveField]> {
        self.psi
            .as_deref()
            .ok_or_else(|| Error::invalid("this run did not reconstruct psi"))
    }
}

/// Run the three-level pipeline. `reconstruct = false` stops after `w` has
/// been transferred to M3.
pub fn run_gwpt(cfg: &ExperimentConfig, reconstruct: bool) -> Result<GwptRun> {
    cfg.validate()?;
    let v = cfg.effective_potential();
    let eps = cfg.eps;
    let stepping = cfg.stepping().stage(Stage::Config)?;
    let m1 = level_grid(cfg, Level::M1).stage(Stage::Config)?;
    let m2 = level_grid(cfg, Level::M2).stage(Stage::Config)?;
    let m3 = level_grid(cfg, Level::M3).stage(Stage::Config)?;
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let ics: Vec<PacketParams> = m1.iter().map(|(z, _)| cfg.initial.params(z)).collect();
    let trajectory = integrate_packets(&m1, &v, eps, &ics, &stepping).stage(Stage::Ode)?;
    timings.ode = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let traj_m2 = trajectory
        .transfer_to(&m1, &m2, cfg.spline_end)
        .stage(Stage::Wprop)?;
    let w0 = w_initial(cfg.initial.amplitude(eps), &cfg.eta).stage(Stage::Wprop)?;
    let w_m2: Vec<WField> = (0..m2.len())
        .into_par_iter()
        .map(|k| {
            let mut out = propagate_w(
                &w0,
                traj_m2.node(k),
                traj_m2.times(),
                &v,
                m2.node(k),
                eps,
                &[],
            )?;
            Ok(out.pop().expect("propagate_w returns the final field"))
        })
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Wprop)?;
    timings.wprop = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let to_m3 = NodeTransfer::between(&m1, &m3, cfg.spline_end).stage(Stage::Reconstruct)?;
    let params_m3 =
        transfer_params(&trajectory.final_params(), &to_m3).stage(Stage::Reconstruct)?;
    let w_transfer = NodeTransfer::between(&m2, &m3, cfg.spline_end).stage(Stage::Reconstruct)?;
    let w_m3 = transfer_w(&w_m2, &w_transfer).stage(Stage::Reconstruct)?;
    let max_lost_fraction = params_m3
        .iter()
        .zip(&w_m3)
        .map(|(s, w)| lost_mass_fraction(w, s, &cfg.x, eps))
        .fold(0.0, f64::max);
    let psi = if reconstruct {
        let fields = params_m3
            .par_iter()
            .zip(&w_m3)
            .map(|(s, w)| {
                let prof = WProfile::new(w, cfg.w_refine, cfg.spline_end)?;
                reconstruct_psi(&prof, s, &cfg.x, eps, cfg.t_final)
            })
            .collect::<Result<Vec<_>>>()
            .stage(Stage::Reconstruct)?;
        Some(fields)
    } else {
        None
    };
    timings.reconstruct = clock.elapsed().as_secs_f64();

    Ok(GwptRun {
        m1,
        m2,
        m3,
        trajectory,
        w_m2,
        params_m3,
        w_m3,
        psi,
        max_lost_fraction,
        timings,
    })
}

fn transfer_params(params: &[PacketParams], t: &NodeTransfer) -> Result<Vec<PacketParams>> {
    let mut comps = vec![[0.0; 7]; t.target_len()];
    for c in 0..7 {
        let col: Vec<f64> = params.iter().map(|s| s.to_array()[c]).collect();
        for (dst, v) in comps.iter_mut().zip(t.apply(&col)?) {
            dst[c] = v;
        }
    }
    Ok(comps.into_iter().map(PacketParams::from_array).collect())
}

/// Spline `w` across nodes, one η point at a time.
pub fn transfer_w(w: &[WField], t: &NodeTransfer) -> Result<Vec<WField>> {
    let first = w
        .first()
        .ok_or_else(|| Error::invalid("no w fields to transfer"))?;
    let n_eta = first.values.len();
    let mut out: Vec<WField> = (0..t.target_len())
        .map(|_| WField {
            grid: first.grid,
            values: vec![Complex64::default(); n_eta],
            time: first.time,
        })
        .collect();
    let mut col = vec![Complex64::default(); w.len()];
    for j in 0..n_eta {
        for (c, f) in col.iter_mut().zip(w) {
            *c = f.values[j];
        }
        for (o, v) in out.iter_mut().zip(t.apply(&col)?) {
            o.values[j] = v;
        }
    }
    Ok(out)
}

/// Spline complex fields across nodes, one x point at a time.
pub fn transfer_fields(fields: &[WaveField], t: &NodeTransfer) -> Result<Vec<WaveField>> {
    let first = fields
        .first()
        .ok_or_else(|| Error::invalid("no fields to transfer"))?;
    let n = first.values.len();
    if let NodeTransfer::Identity(_) = t {
        return Ok(fields.to_vec());
    }
    let mut out: Vec<WaveField> = (0..t.target_len())
        .map(|_| WaveField {
            values: vec![Complex64::default(); n],
            ..first.clone()
        })
        .collect();
    let mut col = vec![Complex64::default(); fields.len()];
    let mut scratch = vec![Complex64::default(); fields.len()];
    let mut row = vec![Complex64::default(); t.target_len()];
    for j in 0..n {
        for (c, f) in col.iter_mut().zip(fields) {
            *c = f.values[j];
        }
        t.apply_into(&col, &mut scratch, &mut row);
        for (o, v) in out.iter_mut().zip(&row) {
            o.values[j] = *v;
        }
    }
    Ok(out)
}

/// Reference solution on M4.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub m4: CollocationGrid,
    pub psi: Vec<WaveField>,
    pub initial_mass: Vec<f64>,
    pub timings: StageTimings,
}

pub fn run_reference(cfg: &ExperimentConfig) -> Result<ReferenceRun> {
    cfg.validate()?;
    let m4 = level_grid(cfg, Level::M4).stage(Stage::Config)?;
    let clock = Instant::now();
    let psi0: Vec<WaveField> = m4
        .iter()
        .map(|(z, _)| initial_psi(&cfg.initial, z, &cfg.x, cfg.eps))
        .collect();
    let initial_mass = psi0.iter().map(WaveField::mass).collect();
    let psi = ds_solve(
        &psi0,
        &m4,
        &cfg.effective_potential(),
        cfg.eps,
        cfg.ds_dt,
        cfg.t_final,
    )
    .stage(Stage::Reference)?;
    let timings = StageTimings {
        reference: clock.elapsed().as_secs_f64(),
        ..Default::default()
    };
    Ok(ReferenceRun {
        m4,
        psi,
        initial_mass,
        timings,
    })
}

/// One row of an error table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub eps: f64,
    pub nz2: usize,
    pub t: f64,
    pub er_psi: f64,
    pub j: JErrors,
    pub timings: StageTimings,
}

/// `j̃` of every field.
pub fn jtilde_all(fields: &[WaveField]) -> Vec<f64> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let mut ev = CurrentEvaluator::new(first.values.len());
    fields.iter().map(|f| ev.jtilde(f)).collect()
}

/// Compare a reconstructed GWPT run with a reference run on M5 = M3.
pub fn compare_runs(
    cfg: &ExperimentConfig,
    g: &GwptRun,
    r: &ReferenceRun,
) -> Result<ComparisonRow> {
    let psi_g = g.psi().stage(Stage::Stats)?;
    let t = NodeTransfer::between(&r.m4, &g.m3, cfg.spline_end).stage(Stage::Stats)?;
    let psi_d = transfer_fields(&r.psi, &t).stage(Stage::Stats)?;
    let e = er_psi(psi_g, &psi_d, &g.m3).stage(Stage::Stats)?;
    let jd = t.apply(&jtilde_all(&r.psi)).stage(Stage::Stats)?;
    let jg = jtilde_all(psi_g);
    let j = er_j(&jg, &jd, &g.m3).stage(Stage::Stats)?;
    let timings = StageTimings {
        reference: r.timings.reference,
        ..g.timings
    };
    Ok(ComparisonRow {
        eps: cfg.eps,
        nz2: cfg.nz2,
        t: cfg.t_final,
        er_psi: e,
        j,
        timings,
    })
}

/// GWPT against its reference at the configured parameters.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonRow> {
    let g = run_gwpt(cfg, true)?;
    let r = run_reference(cfg)?;
    compare_runs(cfg, &g, &r)
}

/// Error of the run with `nz2` against the run with `2·nz2` (same M1, M3).
pub fn nz2_self_convergence(cfg: &ExperimentConfig) -> Result<ComparisonRow> {
    let coarse = run_gwpt(cfg, true)?;
    let fine_cfg = ExperimentConfig {
        nz2: 2 * cfg.nz2,
        ..cfg.clone()
    };
    let fine = run_gwpt(&fine_cfg, true)?;
    let a = coarse.psi()?;
    let b = fine.psi()?;
    let e = er_psi(a, b, &coarse.m3).stage(Stage::Stats)?;
    let j = er_j(&jtilde_all(a), &jtilde_all(b), &coarse.m3).stage(Stage::Stats)?;
    Ok(ComparisonRow {
        eps: cfg.eps,
        nz2: cfg.nz2,
        t: cfg.t_final,
        er_psi: e,
        j,
        timings: coarse.timings,
    })
}

/// Closed-form Gaussian solution at every node of `grid` (quadratic potentials).
pub fn heller_fields(cfg: &ExperimentConfig, grid: &CollocationGrid) -> Result<Vec<WaveField>> {
    let v = cfg.effective_potential();
    let stepping = cfg.stepping()?;
    grid.iter()
        .map(|(z, _)| {
            let h0 = HellerState::initial(&cfg.initial, z, cfg.eps);
            let h = heller_integrate(&h0, &v, z, cfg.eps, &stepping)?;
            Ok(heller_exact(&h, &cfg.x, cfg.eps, cfg.t_final))
        })
        .collect()
}

/// Classical limit products at the final time on M1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalRun {
    pub states: Vec<ClassicalState>,
    pub density: ClassicalProfile,
    pub current: ClassicalProfile,
    pub moments: ClassicalMoments,
}

pub fn run_classical(cfg: &ExperimentConfig, estimator: Estimator) -> Result<ClassicalRun> {
    cfg.validate()?;
    let m1 = level_grid(cfg, Level::M1).stage(Stage::Config)?;
    let v = cfg.effective_potential();
    let run = || -> Result<ClassicalRun> {
        let states = hamilton_integrate(
            &m1,
            &v,
            &cfg.initial.q0,
            &cfg.initial.p0,
            cfg.dt_ode,
            cfg.t_final,
        )?;
        let density = classical_density(&states, &m1, &cfg.x, estimator)?;
        let current = classical_current(&states, &m1, &cfg.x, estimator)?;
        let moments = classical_moments(&states, &m1)?;
        Ok(ClassicalRun {
            states,
            density,
            current,
            moments,
        })
    };
    run().stage(Stage::Classical)
}

/// Maximum z-derivatives of `Re ψ` (over M3) and `Re w` (over M2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZDiagnostics {
    pub eps: f64,
    pub psi: f64,
    pub w: f64,
}

pub fn zdiag(cfg: &ExperimentConfig, g: &GwptRun) -> Result<ZDiagnostics> {
    let psi = g.psi()?;
    let fields: Vec<&[Complex64]> = psi.iter().map(|f| f.values.as_slice()).collect();
    let dpsi = z_derivative_max(&fields, &g.m3, 1, cfg.spline_end).stage(Stage::Stats)?;
    let ws: Vec<&[Complex64]> = g.w_m2.iter().map(|f| f.values.as_slice()).collect();
    let dw = z_derivative_max(&ws, &g.m2, 1, cfg.spline_end).stage(Stage::Stats)?;
    Ok(ZDiagnostics {
        eps: cfg.eps,
        psi: dpsi,
        w: dw,
    })
}

/// Wall-clock comparison at matched meshes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub eps: f64,
    pub n_x: usize,
    pub ds_dt: f64,
    pub timings: StageTimings,
}

impl TimingRow {
    pub fn ratio(&self) -> f64 {
        self.timings.reference / self.timings.gwpt_total()
    }
}

/// Time GWPT (through reconstruction) and the reference solver on the
/// timing mesh for `cfg.eps`, optionally after one untimed warm-up run each.
pub fn timing(cfg: &ExperimentConfig, warmup: bool) -> Result<TimingRow> {
    let (dt, n_x) = timing_mesh(cfg.eps);
    let mut c = cfg.clone();
    c.ds_dt = dt;
    c.x.n = n_x;
    if warmup {
        run_gwpt(&c, true)?;
        run_reference(&c)?;
    }
    let g = run_gwpt(&c, true)?;
    let r = run_reference(&c)?;
    let timings = StageTimings {
        reference: r.timings.reference,
        ..g.timings
    };
    Ok(TimingRow {
        eps: c.eps,
        n_x,
        ds_dt: dt,
        timings,
    })
}
