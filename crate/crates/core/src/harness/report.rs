//! CSV tables, profile files and the JSON provenance sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, Stage};
use crate::harness::config::ExperimentConfig;
use crate::harness::pipeline::{ComparisonRow, StageTimings, TimingRow, ZDiagnostics};
use crate::observables::ObservableSeries;
use crate::spectral::PeriodicGrid;

pub const ERROR_COLUMNS: &str =
    "eps,Nz2,T,Er_psi,Er1_j,Er2_j,wall_ode_s,wall_w_s,wall_rec_s,wall_ds_s";

fn num(v: f64) -> String {
    format!("{v:.10e}")
}

fn wall(v: f64, timing: bool) -> String {
    if timing {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

/// Error table; wall-clock columns stay empty unless `timing` is set.
pub fn error_table(rows: &[ComparisonRow], timing: bool) -> String {
    let mut s = String::from(ERROR_COLUMNS);
    s.push('\n');
    for r in rows {
        let t = &r.timings;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.eps),
            r.nz2,
            num(r.t),
            num(r.er_psi),
            num(r.j.er1),
            num(r.j.er2),
            wall(t.ode, timing),
            wall(t.wprop, timing),
            wall(t.reconstruct, timing),
            wall(t.reference, timing)
        );
    }
    s
}

pub fn timing_table(rows: &[TimingRow]) -> String {
    let mut s =
        String::from("eps,n_x,ds_dt,wall_ode_s,wall_w_s,wall_rec_s,wall_gwpt_s,wall_ds_s,ratio\n");
    for r in rows {
        let t = &r.timings;
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.4}",
            num(r.eps),
            r.n_x,
            num(r.ds_dt),
            t.ode,
            t.wprop,
            t.reconstruct,
            t.gwpt_total(),
            t.reference,
            r.ratio()
        );
    }
    s
}

pub fn zdiag_table(rows: &[ZDiagnostics]) -> String {
    let mut s = String::from("eps,max_dz_re_psi,max_dz_re_w\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", num(r.eps), num(r.psi), num(r.w));
    }
    s
}

/// `x, mean, sd` for a profile observable.
pub fn profile_csv(x: &PeriodicGrid, series: &ObservableSeries) -> String {
    let mut s = String::from("x,mean,sd\n");
    for (j, (m, d)) in series.mean.iter().zip(&series.sd).enumerate() {
        let _ = writeln!(s, "{},{},{}", num(x.point(j)), num(*m), num(*d));
    }
    s
}

/// `x, value` columns for an unnamed profile.
pub fn values_csv(x: &PeriodicGrid, header: &str, values: &[f64]) -> String {
    let mut s = format!("x,{header}\n");
    for (j, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{},{}", num(x.point(j)), num(*v));
    }
    s
}

/// Hex SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let json = serde_json::to_string(cfg)?;
    Ok(Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    determinism: &'static str,
    files: Vec<(String, Stage)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<StageTimings>,
    config: &'a ExperimentConfig,
}

/// Writes output files into one directory and records them for the sidecar.
pub struct ReportWriter {
    dir: PathBuf,
    files: Vec<(String, Stage)>,
}

impl ReportWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ReportWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Write `contents` to `name`, attributing it to `stage`.
    pub fn write(&mut self, name: &str, stage: Stage, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push((name.to_string(), stage));
        Ok(path)
    }

    pub fn finish(
        self,
        command: &str,
        cfg: &ExperimentConfig,
        timings: Option<StageTimings>,
    ) -> Result<PathBuf> {
        let prov = Provenance {
            tool: "gwpt",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: config_hash(cfg)?,
            determinism: "no random sampling; fixed node order and summation order",
            files: self.files,
            timings,
            config: cfg,
        };
        let path = self.dir.join(format!("{command}.provenance.json"));
        fs::write(&path, serde_json::to_string_pretty(&prov)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TestId;
    use crate::observables::JErrors;

    #[test]
    fn error_table_layout() {
        let row = ComparisonRow {
            eps: 1.0 / 64.0,
            nz2: 32,
            t: 1.0,
            er_psi: 3e-5,
            j: JErrors {
                er1: 1e-7,
                er2: 2e-7,
                er1_absolute: false,
                er2_absolute: false,
            },
            timings: StageTimings {
                ode: 0.5,
                wprop: 0.25,
                reconstruct: 1.0,
                reference: 3.0,
            },
        };
        let plain = error_table(std::slice::from_ref(&row), false);
        let mut lines = plain.lines();
        assert_eq!(lines.next(), Some(ERROR_COLUMNS));
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells[1], "32");
        assert!(cells[6..].iter().all(|c| c.is_empty()));
        let timed = error_table(&[row], true);
        assert!(timed.lines().nth(1).unwrap().ends_with("3.000000"));
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::preset(TestId::A1ii, 1.0 / 64.0);
        let b = a.with_eps(1.0 / 128.0);
        assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }
}
