//! Experiment configuration, named test presets and validation.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::classical::Estimator;
use crate::error::{Error, Result};
use crate::interp::EndCondition;
use crate::packet::{AffineZ, InitialSpec, TimeStepping};
use crate::potential::Potential;
use crate::quadrature::Distribution;
use crate::reconstruct::DEFAULT_W_REFINE;
use crate::spectral::PeriodicGrid;
use crate::wprop::default_eta_grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    A1i,
    A1ii,
    A2,
    A3,
    A4,
    B,
    C,
    D,
    Custom,
}

impl TestId {
    pub const ALL: [TestId; 9] = [
        TestId::A1i,
        TestId::A1ii,
        TestId::A2,
        TestId::A3,
        TestId::A4,
        TestId::B,
        TestId::C,
        TestId::D,
        TestId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::A1i => "a1i",
            TestId::A1ii => "a1ii",
            TestId::A2 => "a2",
            TestId::A3 => "a3",
            TestId::A4 => "a4",
            TestId::B => "b",
            TestId::C => "c",
            TestId::D => "d",
            TestId::Custom => "custom",
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        TestId::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::config("test_id", format!("unknown test `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Psi,
    Rho,
    J,
    Stats,
    Errors,
    Zdiag,
    Classical,
    Timing,
}

/// How the random slopes of the potential scale with `ε`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeScale {
    #[default]
    One,
    Eps,
    SqrtEps,
}

impl SlopeScale {
    pub fn factor(self, eps: f64) -> f64 {
        match self {
            SlopeScale::One => 1.0,
            SlopeScale::Eps => eps,
            SlopeScale::SqrtEps => eps.sqrt(),
        }
    }
}

/// Parse `"1/256"`, `"0.1"` or a plain number.
pub fn parse_rational(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    fn value<E: serde::de::Error>(self) -> std::result::Result<f64, E> {
        match self {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) => parse_rational(&s)
                .ok_or_else(|| E::custom(format!("cannot parse `{s}` as a number or ratio"))),
        }
    }
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    NumOrStr::deserialize(d)?.value()
}

fn de_rational_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<NumOrStr>::deserialize(d)?
        .into_iter()
        .map(NumOrStr::value)
        .collect()
}

/// Parameter lists for the table sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    #[serde(deserialize_with = "de_rational_list")]
    pub eps: Vec<f64>,
    pub nz2: Vec<usize>,
    #[serde(deserialize_with = "de_rational_list")]
    pub times: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            eps: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
            nz2: vec![2, 4, 8, 16, 32],
            times: vec![1.0, 2f64.sqrt(), 2.0, 8f64.sqrt(), 4.0, 32f64.sqrt(), 8.0],
        }
    }
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub test_id: TestId,
    #[serde(deserialize_with = "de_rational")]
    pub eps: f64,
    #[serde(rename = "T", deserialize_with = "de_rational")]
    pub t_final: f64,
    /// Potential with unscaled slopes; see `potential_scale`.
    pub potential: Potential,
    pub potential_scale: SlopeScale,
    pub initial: InitialSpec,
    pub z_dist: Distribution,
    pub z_dim: usize,
    pub nz1: usize,
    pub nz2: usize,
    pub nz3: usize,
    pub nz4: usize,
    pub dt_ode: f64,
    pub dt_w: f64,
    pub eta: PeriodicGrid,
    pub x: PeriodicGrid,
    #[serde(deserialize_with = "de_rational")]
    pub ds_dt: f64,
    pub spline_end: EndCondition,
    pub w_refine: usize,
    pub classical_estimator: Estimator,
    pub outputs: BTreeSet<OutputKind>,
    pub sweep: SweepSpec,
}

/// Reference mesh `Δx = 2π/9600` on `[-π, π)`, used with `Δt = 1/600`.
pub fn reference_x_grid() -> PeriodicGrid {
    PeriodicGrid {
        min: -std::f64::consts::PI,
        max: std::f64::consts::PI,
        n: 9600,
    }
}

impl ExperimentConfig {
    /// Builtin configuration of a named test at `eps`.
    pub fn preset(id: TestId, eps: f64) -> Self {
        let i = Complex64::new(0.0, 1.0);
        let standard = InitialSpec {
            q0: AffineZ::constant(FRAC_PI_2),
            p0: AffineZ::constant(0.0),
            alpha0: i,
        };
        let mut cfg = ExperimentConfig {
            test_id: id,
            eps,
            t_final: 1.0,
            potential: Potential::cosine(1.0, vec![0.9]),
            potential_scale: SlopeScale::One,
            initial: standard.clone(),
            z_dist: Distribution::Uniform,
            z_dim: 1,
            nz1: 500,
            nz2: 32,
            nz3: 500,
            nz4: 500,
            dt_ode: 2.5e-4,
            dt_w: 0.01,
            eta: default_eta_grid(),
            x: reference_x_grid(),
            ds_dt: 1.0 / 600.0,
            spline_end: EndCondition::default(),
            w_refine: DEFAULT_W_REFINE,
            classical_estimator: Estimator::default(),
            outputs: [OutputKind::Rho, OutputKind::J, OutputKind::Stats]
                .into_iter()
                .collect(),
            sweep: SweepSpec::default(),
        };
        match id {
            TestId::A1i => cfg.potential = Potential::harmonic(1.0, vec![0.95]),
            TestId::A1ii | TestId::Custom => {}
            TestId::A2 => cfg.z_dist = Distribution::StandardNormal,
            TestId::A3 => {
                cfg.z_dist = Distribution::StandardNormal;
                cfg.potential = Potential::cosine(1.0, vec![1.0]);
                cfg.potential_scale = SlopeScale::Eps;
            }
            TestId::A4 => {
                cfg.z_dist = Distribution::StandardNormal;
                cfg.potential = Potential::cosine(1.0, vec![1.0]);
                cfg.potential_scale = SlopeScale::SqrtEps;
            }
            TestId::B | TestId::C => {
                cfg.potential = Potential::cosine(1.0, vec![]);
                cfg.initial.q0 = AffineZ::new(FRAC_PI_2, vec![0.5 * FRAC_PI_2]);
                if id == TestId::C {
                    cfg.initial.p0 = AffineZ::new(0.0, vec![0.5]);
                    cfg.t_final = 0.5;
                }
                cfg.sweep.eps = vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 256.0];
            }
            TestId::D => {
                cfg.potential = Potential::cosine(1.0, vec![0.2, 0.7]);
                cfg.z_dim = 2;
                cfg.nz1 = 32;
                cfg.nz2 = 32;
                cfg.nz3 = 32;
                cfg.nz4 = 32;
                cfg.sweep.eps = vec![0.1];
            }
        }
        cfg
    }

    /// Parse JSON. Fields missing from the file are taken from the preset of
    /// its `test_id` (`custom` starts from the a1-ii values).
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let obj = raw
            .as_object()
            .ok_or_else(|| Error::config("config", "expected a JSON object"))?;
        let id = match obj.get("test_id") {
            Some(serde_json::Value::String(s)) => s.parse::<TestId>()?,
            Some(_) => return Err(Error::config("test_id", "must be a string")),
            None => TestId::Custom,
        };
        let eps = match obj.get("eps") {
            Some(v) => match v {
                serde_json::Value::Number(n) => n.as_f64(),
                serde_json::Value::String(s) => parse_rational(s),
                _ => None,
            }
            .ok_or_else(|| {
                Error::config("eps", "expected a number or a ratio such as \"1/256\"")
            })?,
            None => 1.0 / 256.0,
        };
        let mut base = serde_json::to_value(Self::preset(id, eps))?;
        let target = base
            .as_object_mut()
            .expect("config serializes to an object");
        for (k, v) in obj {
            if !target.contains_key(k) {
                return Err(Error::config("config", format!("unknown field `{k}`")));
            }
            if k == "test_id" {
                target.insert(k.clone(), serde_json::Value::String(id.name().to_string()));
            } else {
                target.insert(k.clone(), v.clone());
            }
        }
        let cfg: ExperimentConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Potential with slopes scaled for the configured `ε`.
    pub fn effective_potential(&self) -> Potential {
        let f = self.potential_scale.factor(self.eps);
        Potential {
            slopes: self.potential.slopes.iter().map(|c| c * f).collect(),
            ..self.potential.clone()
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        ExperimentConfig {
            eps,
            ..self.clone()
        }
    }

    pub fn stepping(&self) -> Result<TimeStepping> {
        TimeStepping::new(self.t_final, self.dt_w, self.dt_ode)
    }

    pub fn wants(&self, o: OutputKind) -> bool {
        self.outputs.contains(&o)
    }

    /// Check every invariant; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::config(
                "eps",
                format!("must be positive and finite, got {}", self.eps),
            ));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(
                "T",
                format!("must be finite and non-negative, got {}", self.t_final),
            ));
        }
        if !(self.z_dim == 1 || self.z_dim == 2) {
            return Err(Error::config(
                "z_dim",
                format!("must be 1 or 2, got {}", self.z_dim),
            ));
        }
        let counts: [(&'static str, usize); 4] = [
            ("nz1", self.nz1),
            ("nz2", self.nz2),
            ("nz3", self.nz3),
            ("nz4", self.nz4),
        ];
        if let Some(&(name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(Error::config(name, "must be at least 1"));
        }
        if self.z_dim == 2
            && !(self.nz1 == self.nz2 && self.nz2 == self.nz3 && self.nz3 == self.nz4)
        {
            return Err(Error::config("nz2", "2-D z requires nz1 = nz2 = nz3 = nz4"));
        }
        if self.potential.slopes.len() > self.z_dim {
            return Err(Error::config(
                "potential",
                format!(
                    "{} slopes for a {}-D random variable",
                    self.potential.slopes.len(),
                    self.z_dim
                ),
            ));
        }
        if self.initial.q0.slopes.len() > self.z_dim || self.initial.p0.slopes.len() > self.z_dim {
            return Err(Error::config(
                "initial",
                "more initial-data slopes than random dimensions",
            ));
        }
        if !(self.initial.alpha0.im > 0.0) {
            return Err(Error::config("initial", "Im alpha0 must be positive"));
        }
        if !(self.dt_ode > 0.0) {
            return Err(Error::config("dt_ode", "must be positive"));
        }
        if !(self.dt_w > 0.0) {
            return Err(Error::config("dt_w", "must be positive"));
        }
        TimeStepping::new(self.t_final, self.dt_w, self.dt_ode)
            .map_err(|e| Error::config("dt_w", e.to_string()))?;
        if !self.eta.n.is_power_of_two() || self.eta.n < 8 {
            return Err(Error::config(
                "eta",
                format!("n must be a power of two >= 8, got {}", self.eta.n),
            ));
        }
        if !(self.eta.max > self.eta.min
            && (self.eta.min + self.eta.max).abs() < 1e-12
            && self.eta.max > 2.0)
        {
            return Err(Error::config(
                "eta",
                "domain must be symmetric [-L, L) with L > 2",
            ));
        }
        if !(self.x.max > self.x.min && self.x.n >= 4) {
            return Err(Error::config("x", "needs max > min and at least 4 points"));
        }
        if !(self.ds_dt > 0.0) {
            return Err(Error::config("ds_dt", "must be positive"));
        }
        if self.w_refine == 0 {
            return Err(Error::config("w_refine", "must be at least 1"));
        }
        if self.sweep.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::config("sweep", "eps values must be positive"));
        }
        if self.sweep.nz2.contains(&0) {
            return Err(Error::config("sweep", "nz2 values must be positive"));
        }
        if self.sweep.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::config("sweep", "times must be non-negative"));
        }
        Ok(())
    }
}

/// Reference mesh `(Δt, n_x)` used for timing comparisons: `Δt = 1/N`,
/// `Δx = 2π/(6N)`.
pub fn timing_mesh(eps: f64) -> (f64, usize) {
    let table = [(256.0, 400), (512.0, 600), (640.0, 800), (768.0, 900)];
    let inv = 1.0 / eps;
    let n = table
        .iter()
        .find(|(e, _)| (inv - e).abs() < 1e-6 * e)
        .map(|&(_, n)| n)
        .unwrap_or_else(|| (1.5625 * inv).ceil() as usize);
    (1.0 / n as f64, 6 * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/256"), Some(1.0 / 256.0));
        assert_eq!(parse_rational(" 0.1 "), Some(0.1));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn json_overrides_preset() {
        let cfg =
            ExperimentConfig::from_json(r#"{"test_id": "a3", "eps": "1/64", "nz2": 16}"#).unwrap();
        assert_eq!(cfg.test_id, TestId::A3);
        assert_eq!(cfg.eps, 1.0 / 64.0);
        assert_eq!(cfg.nz2, 16);
        assert_eq!(cfg.effective_potential().slopes, vec![1.0 / 64.0]);
        assert_eq!(cfg.z_dist, Distribution::StandardNormal);
        let round = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn validation_names_fields() {
        let field = |json: &str| match ExperimentConfig::from_json(json) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field(r#"{"dt_w": 0.003125}"#), "dt_w");
        assert_eq!(field(r#"{"eps": -1}"#), "eps");
        assert_eq!(field(r#"{"test_id": "d", "nz2": 16}"#), "nz2");
        assert_eq!(
            field(r#"{"eta": {"min": -20, "max": 20, "n": 100}}"#),
            "eta"
        );
        assert_eq!(field(r#"{"test_id": "zz"}"#), "test_id");
        assert_eq!(field(r#"{"bogus": 1}"#), "config");
        assert_eq!(field(r#"{"nz1": 0}"#), "nz1");
    }

    #[test]
    fn presets_match_named_tests() {
        let b = ExperimentConfig::preset(TestId::B, 1.0 / 64.0);
        assert!((b.initial.q0.eval(&[1.0]) - 1.5 * FRAC_PI_2).abs() < 1e-15);
        let c = ExperimentConfig::preset(TestId::C, 1.0 / 64.0);
        assert_eq!(c.t_final, 0.5);
        assert_eq!(c.initial.p0.eval(&[-1.0]), -0.5);
        let d = ExperimentConfig::preset(TestId::D, 0.1);
        assert_eq!((d.z_dim, d.nz1, d.nz4), (2, 32, 32));
        let a1 = ExperimentConfig::preset(TestId::A1i, 1.0 / 256.0);
        assert!((a1.eta.dx() - 0.3125).abs() < 1e-15);
        assert_eq!((a1.dt_w, a1.dt_ode), (0.01, 2.5e-4));
        for id in TestId::ALL {
            ExperimentConfig::preset(id, 1.0 / 64.0).validate().unwrap();
        }
    }

    #[test]
    fn timing_meshes() {
        assert_eq!(timing_mesh(1.0 / 256.0), (1.0 / 400.0, 2400));
        assert_eq!(timing_mesh(1.0 / 640.0), (1.0 / 800.0, 4800));
    }
}
