//! Job configuration files (TOML).
//!
//! ```toml
//! [model]
//! n = 2              # optional when centers are listed
//! m = 1.0
//! a = 0.25           # or G = ..., with a = 8πG
//! g0 = "auto"        # or a positive number
//!
//! [[centers]]        # optional; all strings at the origin when omitted
//! x = -1.0
//! y = 0.0
//! multiplicity = 1
//!
//! [grid]
//! radius = 16.0
//! nodes = 257
//!
//! [solver]
//! schedule = "default"   # or a strictly decreasing list in (0, 1)
//! tol = 1e-8
//! max_iterations = 500
//!
//! [radial]
//! t_end = 30.0
//! step = 1e-3
//! seed_tol = 1e-13
//! # t0 = -2.0
//! # fit_window = [3.0, 9.0]
//!
//! [output]
//! dir = "out"
//!
//! [sweep]
//! n = [1, 2, 3]
//! m = [1.0, 2.0]
//! ```

use crate::background::{BackgroundError, StringConfiguration};
use crate::model::{calibrate_g0, ModelError, PotentialModel, CRITICAL_TOL};
use crate::planar::{default_schedule, SolverOptions};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("a·N = {0} > 1 lies outside the existence regime 0 <= 8πG·N <= 1")]
    Regime(f64),
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Regime(an) => ConfigError::Regime(an),
            other => ConfigError::Invalid(other.to_string()),
        }
    }
}

impl From<BackgroundError> for ConfigError {
    fn from(e: BackgroundError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

/// A metric scale or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleSpec {
    Auto,
    Value(f64),
}

/// An explicit δ list or the keyword `"default"`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Default,
    Explicit(Vec<f64>),
}

impl Serialize for ScaleSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ScaleSpec::Auto => s.serialize_str("auto"),
            ScaleSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ScaleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ScaleSpec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"auto\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ScaleSpec, E> {
                Ok(ScaleSpec::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ScaleSpec, E> {
                Ok(ScaleSpec::Value(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ScaleSpec, E> {
                if v == "auto" {
                    Ok(ScaleSpec::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for ScheduleSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ScheduleSpec::Default => s.serialize_str("default"),
            ScheduleSpec::Explicit(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ScheduleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ScheduleSpec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of δ values or \"default\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ScheduleSpec, E> {
                if v == "default" {
                    Ok(ScheduleSpec::Default)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<ScheduleSpec, A::Error> {
                let mut out = Vec::new();
                while let Some(x) = seq.next_element::<f64>()? {
                    out.push(x);
                }
                Ok(ScheduleSpec::Explicit(out))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, rename = "G", skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    pub g0: ScaleSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterEntry {
    pub x: f64,
    pub y: f64,
    #[serde(default = "one")]
    pub multiplicity: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { radius: 16.0, nodes: 257 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_schedule_spec")]
    pub schedule: ScheduleSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_schedule_spec() -> ScheduleSpec {
    ScheduleSpec::Default
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iterations() -> usize {
    SolverOptions::default().max_iterations
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { schedule: ScheduleSpec::Default, tol: default_tol(), max_iterations: default_max_iterations() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_seed_tol")]
    pub seed_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
}

fn default_t_end() -> f64 {
    30.0
}

fn default_step() -> f64 {
    crate::radial::DEFAULT_STEP
}

fn default_seed_tol() -> f64 {
    crate::radial::DEFAULT_SEED_TOL
}

impl Default for RadialSection {
    fn default() -> Self {
        Self { t0: None, t_end: default_t_end(), step: default_step(), seed_tol: default_seed_tol(), fit_window: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n: Vec<u32>,
    pub m: Vec<f64>,
}

/// A validated job. `model.a` is always set and `model.G` never, so
/// serializing and re-parsing gives back the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centers: Vec<CenterEntry>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub radial: RadialSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

pub fn parse_config(text: &str) -> Result<JobConfig, ConfigError> {
    let mut cfg: JobConfig = toml::from_str(text)?;
    cfg.normalize()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &JobConfig) -> Result<String, ConfigError> {
    Ok(toml::to_string(cfg)?)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl JobConfig {
    fn normalize(&mut self) -> Result<(), ConfigError> {
        let model = &mut self.model;
        match (model.a, model.gravity) {
            (Some(_), Some(_)) => return Err(invalid("give either model.a or model.G, not both")),
            (None, Some(g)) => {
                model.a = Some(8.0 * PI * g);
                model.gravity = None;
            }
            (None, None) => return Err(invalid("missing model.a (or model.G)")),
            (Some(_), None) => {}
        }
        if !self.centers.is_empty() {
            let total: u32 = self.centers.iter().map(|c| c.multiplicity).sum();
            match model.n {
                Some(n) if n != total => {
                    return Err(invalid(format!("model.n = {n} but the centers carry {total} strings")))
                }
                _ => model.n = Some(total),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let n = self.string_number();
        let a = self.coupling();
        let g0 = match self.model.g0 {
            ScaleSpec::Value(v) => v,
            ScaleSpec::Auto => 1.0,
        };
        PotentialModel::new(n, self.model.m, a, g0)?;
        if self.model.g0 == ScaleSpec::Auto && n == 0 {
            return Err(invalid("g0 = \"auto\" needs at least one string"));
        }
        self.strings()?;
        if !(self.grid.radius.is_finite() && self.grid.radius > 0.0) || self.grid.nodes < 5 {
            return Err(invalid("grid needs radius > 0 and at least 5 nodes per axis"));
        }
        if let ScheduleSpec::Explicit(s) = &self.solver.schedule {
            if s.is_empty() || s.iter().any(|&d| !(d > 0.0 && d < 1.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("solver.schedule must be non-empty, strictly decreasing and inside (0, 1)"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iterations == 0 {
            return Err(invalid("solver.tol and solver.max_iterations must be positive"));
        }
        let r = &self.radial;
        if !(r.step > 0.0 && r.seed_tol > 0.0 && r.t_end.is_finite()) {
            return Err(invalid("radial.step and radial.seed_tol must be positive, radial.t_end finite"));
        }
        if let Some([lo, hi]) = r.fit_window {
            if !(lo < hi) {
                return Err(invalid("radial.fit_window must be increasing"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.n.is_empty() || s.m.is_empty() || s.n.contains(&0) || s.m.iter().any(|&m| !(m > 0.0)) {
                return Err(invalid("sweep.n and sweep.m must be non-empty lists of positive values"));
            }
        }
        Ok(())
    }

    pub fn string_number(&self) -> u32 {
        self.model.n.unwrap_or(0)
    }

    pub fn coupling(&self) -> f64 {
        self.model.a.expect("normalized")
    }

    pub fn is_critical(&self) -> bool {
        (self.coupling() * self.string_number() as f64 - 1.0).abs() <= CRITICAL_TOL
    }

    /// Centers as listed, or all strings at the origin.
    pub fn strings(&self) -> Result<StringConfiguration, ConfigError> {
        if self.centers.is_empty() {
            let n = self.string_number();
            return Ok(if n == 0 { StringConfiguration::empty() } else { StringConfiguration::coincident([0.0, 0.0], n) });
        }
        Ok(StringConfiguration::new(self.centers.iter().map(|c| ([c.x, c.y], c.multiplicity)))?)
    }

    /// The model with `g0` resolved by calibration for the radial problem.
    pub fn radial_model(&self) -> Result<PotentialModel, ConfigError> {
        let n = self.string_number();
        let g0 = match self.model.g0 {
            ScaleSpec::Value(v) => v,
            ScaleSpec::Auto => calibrate_g0(n, self.model.m)?,
        };
        Ok(PotentialModel::new(n, self.model.m, self.coupling(), g0)?)
    }

    /// The model with a provisional unit scale when `g0 = "auto"`; planar
    /// commands rescale it from the subsolution check.
    pub fn planar_base_model(&self) -> Result<PotentialModel, ConfigError> {
        let g0 = match self.model.g0 {
            ScaleSpec::Value(v) => v,
            ScaleSpec::Auto => 1.0,
        };
        Ok(PotentialModel::new(self.string_number(), self.model.m, self.coupling(), g0)?)
    }

    pub fn schedule(&self) -> Vec<f64> {
        match &self.solver.schedule {
            ScheduleSpec::Default => default_schedule(),
            ScheduleSpec::Explicit(s) => s.clone(),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iterations: self.solver.max_iterations }
    }
}
