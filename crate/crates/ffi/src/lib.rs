//! C ABI over the gwpt pipeline.
//!
//! Configurations and runs are opaque handles created and released by the
//! library. Every fallible call returns a `GwptStatus`; the message of the
//! most recent failure on the calling thread is available from
//! `gwpt_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gwpt::harness::{self, ExperimentConfig, TestId};
use gwpt::observables::{density, stats, CurrentEvaluator};
use gwpt::quadrature::{gauss_rule, Distribution};
use gwpt::{Error, Stage};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GwptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Ode = 4,
    Wprop = 5,
    Reconstruct = 6,
    Reference = 7,
    Stats = 8,
    Classical = 9,
    Output = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Probability law of the random variable.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GwptDistribution {
    Uniform = 0,
    StandardNormal = 1,
}

/// Relative errors of a GWPT run against the reference solver.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GwptErrors {
    pub er_psi: f64,
    pub er1_j: f64,
    pub er2_j: f64,
}

/// Opaque experiment configuration.
pub struct GwptConfig {
    inner: ExperimentConfig,
}

/// Opaque result of a reconstructed GWPT run.
pub struct GwptRun {
    inner: harness::GwptRun,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GwptStatus {
    match e.stage() {
        Some(Stage::Config) => GwptStatus::Config,
        Some(Stage::Ode) => GwptStatus::Ode,
        Some(Stage::Wprop) => GwptStatus::Wprop,
        Some(Stage::Reconstruct) => GwptStatus::Reconstruct,
        Some(Stage::Reference) => GwptStatus::Reference,
        Some(Stage::Stats) => GwptStatus::Stats,
        Some(Stage::Classical) => GwptStatus::Classical,
        Some(Stage::Output) => GwptStatus::Output,
        None => GwptStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GwptStatus, String)>) -> GwptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GwptStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            GwptStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GwptStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GwptStatus, String) {
    (GwptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GwptStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GwptStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a>(
    p: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], (GwptStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err((
            GwptStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn gwpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gwpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Nodes and probability weights of the `n`-point Gauss rule.
///
/// # Safety
/// `nodes` and `weights` must each point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gwpt_gauss_rule(
    dist: GwptDistribution,
    n: usize,
    nodes: *mut f64,
    weights: *mut f64,
) -> GwptStatus {
    guard(|| {
        let d = match dist {
            GwptDistribution::Uniform => Distribution::Uniform,
            GwptDistribution::StandardNormal => Distribution::StandardNormal,
        };
        let (x, w) = gauss_rule(d, n).map_err(lib_err)?;
        out_slice(nodes, n, n, "nodes")?.copy_from_slice(&x);
        out_slice(weights, n, n, "weights")?.copy_from_slice(&w);
        Ok(())
    })
}

/// Preset configuration for a named test (`a1i`, `a1ii`, `a2`, `a3`, `a4`,
/// `b`, `c`, `d`) at the given ε.
///
/// # Safety
/// `test` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gwpt_config_preset(
    test: *const c_char,
    eps: f64,
    out: *mut *mut GwptConfig,
) -> GwptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let id: TestId = str_arg(test, "test")?.parse().map_err(lib_err)?;
        let inner = ExperimentConfig::preset(id, eps);
        inner.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GwptConfig { inner }));
        Ok(())
    })
}

/// Configuration from a JSON document (fields override the named preset).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gwpt_config_from_json(
    json: *const c_char,
    out: *mut *mut GwptConfig,
) -> GwptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ExperimentConfig::from_json(str_arg(json, "json")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GwptConfig { inner }));
        Ok(())
    })
}

/// Set the collocation sizes per axis for the levels M1 to M4.
///
/// # Safety
/// `cfg` must come from a `gwpt_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn gwpt_config_set_nodes(
    cfg: *mut GwptConfig,
    nz1: usize,
    nz2: usize,
    nz3: usize,
    nz4: usize,
) -> GwptStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = c.inner.clone();
        (next.nz1, next.nz2, next.nz3, next.nz4) = (nz1, nz2, nz3, nz4);
        next.validate().map_err(lib_err)?;
        c.inner = next;
        Ok(())
    })
}

/// Set the final time.
///
/// # Safety
/// `cfg` must come from a `gwpt_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn gwpt_config_set_final_time(
    cfg: *mut GwptConfig,
    t_final: f64,
) -> GwptStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let next = ExperimentConfig {
            t_final,
            ..c.inner.clone()
        };
        next.validate().map_err(lib_err)?;
        c.inner = next;
        Ok(())
    })
}

/// Release a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must be null or come from a `gwpt_config_*` constructor, and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gwpt_config_free(cfg: *mut GwptConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run GWPT through reconstruction.
///
/// # Safety
/// `cfg` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run(cfg: *const GwptConfig, out: *mut *mut GwptRun) -> GwptStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = harness::run_gwpt(&c.inner, true).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GwptRun { inner }));
        Ok(())
    })
}

/// Number of reconstruction nodes (M3) of a run, or 0 for null.
///
/// # Safety
/// `run` must be null or a live run.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run_node_count(run: *const GwptRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.m3.len())
}

/// Number of x grid points of a run, or 0 for null.
///
/// # Safety
/// `run` must be null or a live run.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run_x_len(run: *const GwptRun) -> usize {
    run.as_ref()
        .and_then(|r| r.inner.psi.as_ref())
        .and_then(|p| p.first())
        .map_or(0, |f| f.values.len())
}

/// Real and imaginary parts of ψ at one node.
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run_psi(
    run: *const GwptRun,
    node: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> GwptStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let psi = r.inner.psi().map_err(lib_err)?;
        let f = psi.get(node).ok_or_else(|| {
            (
                GwptStatus::InvalidArgument,
                format!("node {node} out of range"),
            )
        })?;
        let n = f.values.len();
        let (re, im) = (out_slice(re, len, n, "re")?, out_slice(im, len, n, "im")?);
        for ((r, i), v) in re.iter_mut().zip(im.iter_mut()).zip(&f.values) {
            (*r, *i) = (v.re, v.im);
        }
        Ok(())
    })
}

/// Mean and standard deviation of the position density (`which = 0`) or
/// the current (`which = 1`) over the random variable.
///
/// # Safety
/// `mean` and `sd` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run_profile(
    run: *const GwptRun,
    which: u32,
    mean: *mut f64,
    sd: *mut f64,
    len: usize,
) -> GwptStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let psi = r.inner.psi().map_err(lib_err)?;
        let n = psi.first().map_or(0, |f| f.values.len());
        let per_node: Vec<Vec<f64>> = match which {
            0 => psi.iter().map(density).collect(),
            1 => {
                let mut ev = CurrentEvaluator::new(n);
                psi.iter().map(|f| ev.current(f)).collect()
            }
            _ => {
                return Err((
                    GwptStatus::InvalidArgument,
                    format!("unknown profile {which}"),
                ))
            }
        };
        let s =
            stats(if which == 0 { "rho" } else { "j" }, per_node, &r.inner.m3).map_err(lib_err)?;
        out_slice(mean, len, n, "mean")?.copy_from_slice(&s.mean);
        out_slice(sd, len, n, "sd")?.copy_from_slice(&s.sd);
        Ok(())
    })
}

/// Release a run. Null is ignored.
///
/// # Safety
/// `run` must be null or come from `gwpt_run`, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gwpt_run_free(run: *mut GwptRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Run GWPT and the reference solver and compare them on M3.
///
/// # Safety
/// `cfg` must be a live configuration and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gwpt_compare(cfg: *const GwptConfig, out: *mut GwptErrors) -> GwptStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let row = harness::run_comparison(&c.inner).map_err(lib_err)?;
        *o = GwptErrors {
            er_psi: row.er_psi,
            er1_j: row.j.er1,
            er2_j: row.j.er2,
        };
        Ok(())
    })
}
