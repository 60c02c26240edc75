//! JSON experiment configs. Every file carries `schema_version`; unknown keys
//! are rejected and missing keys take the defaults below, which reproduce
//! the acceptance runs.

use crate::error::{validation, CliResult};
use loxodrome::damped_wave::{DampedWaveProblem, InitialData};
use loxodrome::flow::{ModelSpec, Neighborhood, OrbitOptions, RadialDamping};
use loxodrome::io::DenseMatrix;
use loxodrome::profile::WarpProfile;
use loxodrome::resolvent::{self, AbsorberKind};
use loxodrome::spectra::BarrierTopSelection;
use loxodrome::symplectic::Tolerances;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Reads a config file, or the defaults when there is none.
pub fn load<T: DeserializeOwned + Default + Versioned>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text).map_err(|e| validation(format!("config {}: {e}", path.display())))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(validation(format!(
            "config {}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            cfg.schema_version()
        )));
    }
    Ok(cfg)
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(NormalFormConfig, OrbitConfig, SpectrumConfig, ResolventConfig, DampedWaveConfig);

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(validation(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// symplectic map `S`
    #[default]
    Map,
    /// Hamilton matrix `B`
    Hamilton,
    /// symmetric coefficient matrix `Q` of `q(ρ) = ½ <ρ, Qρ>`
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalFormConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub kind: MatrixKind,
    pub matrix: Option<DenseMatrix>,
    /// Jordan chain coupling; `None` uses `min(1, min Re λ / 2)`
    pub jordan_scale: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        Self { schema_version: SCHEMA_VERSION, kind: MatrixKind::Map, matrix: None, jordan_scale: None, tolerances: Tolerances::default() }
    }
}

impl NormalFormConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.matrix.is_none() {
            return Err(validation("no input matrix: pass --input or set \"matrix\" in the config"));
        }
        if let Some(e) = self.jordan_scale {
            if !(e > 0.0 && e <= 1.0) {
                return Err(validation(format!("jordan_scale must lie in (0, 1], got {e}")));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("unit_tol", t.unit_tol),
            ("rank_tol", t.rank_tol),
            ("cluster_tol", t.cluster_tol),
            ("symplectic_tol", t.symplectic_tol),
            ("hamiltonian_tol", t.hamiltonian_tol),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub damping: RadialDamping,
    pub neighborhood: Neighborhood,
    pub t_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            damping: RadialDamping { inner: 0.5, outer: 1.0, strength: 1.0 },
            neighborhood: Neighborhood::ClairautBand { r_max: 0.2, c0: 1.0, c_tol: 0.01 },
            t_max: 50.0,
            samples: 500,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub system: ModelSpec,
    pub guess: Vec<f64>,
    pub period_guess: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub residual_tol: f64,
    /// geometric control check of the trajectories, when present
    pub control: Option<ControlConfig>,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        let o = OrbitOptions::default();
        let r0: f64 = 0.05;
        Self {
            schema_version: SCHEMA_VERSION,
            system: ModelSpec::SurfaceOfRevolution { profile: WarpProfile::Cosh, half_length: 3.0 },
            guess: vec![r0, 0.0, 0.0, r0.cosh()],
            period_guess: 2.0 * std::f64::consts::PI + 0.2,
            tol: o.tol,
            max_iterations: o.max_iterations,
            residual_tol: o.residual_tol,
            control: None,
        }
    }
}

impl OrbitConfig {
    pub fn options(&self) -> OrbitOptions {
        OrbitOptions { tol: self.tol, max_iterations: self.max_iterations, residual_tol: self.residual_tol }
    }

    pub fn validate(&self) -> CliResult<()> {
        positive("period_guess", self.period_guess)?;
        positive("tol", self.tol)?;
        positive("residual_tol", self.residual_tol)?;
        if self.max_iterations == 0 {
            return Err(validation("max_iterations must be at least 1"));
        }
        if let Some(c) = &self.control {
            positive("control.t_max", c.t_max)?;
            if c.samples == 0 {
                return Err(validation("control.samples must be at least 1"));
            }
            if !(c.damping.inner < c.damping.outer && c.damping.strength >= 0.0) {
                return Err(validation("control.damping needs inner < outer and strength >= 0"));
            }
            if !matches!(self.system, ModelSpec::SurfaceOfRevolution { .. }) {
                return Err(validation("the control check needs a surface_of_revolution system"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub k: Vec<u32>,
    pub delta: f64,
    #[serde(rename = "R")]
    pub half_length: f64,
    pub nodes: usize,
    pub selection: BarrierTopSelection,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            k: vec![10, 20, 40, 80],
            delta: 0.5,
            half_length: 3.0,
            nodes: 2048,
            selection: BarrierTopSelection::default(),
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.k.is_empty() {
            return Err(validation("k list is empty"));
        }
        positive("R", self.half_length)?;
        if !(self.delta >= 0.0 && self.delta < self.half_length) {
            return Err(validation(format!("delta must lie in [0, R), got {}", self.delta)));
        }
        Ok(())
    }
}

/// `φ = 1 - ψ(x)` with `ψ = 1` on `|x| ≤ inner` and `0` on `|x| ≥ outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub model: resolvent::ModelSpec,
    pub h: Vec<f64>,
    /// real parts sampled uniformly in `[-re_max, re_max]`
    pub re_max: f64,
    pub re_points: usize,
    /// imaginary parts sampled in `[-c0 h, c0 h]`
    pub c0: f64,
    pub im_points: usize,
    pub cutoff: Option<CutoffConfig>,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: loxodrome::acceptance::resolvent_model(AbsorberKind::PhaseSpace { xi_inner: 0.25, xi_outer: 0.5 }),
            h: vec![1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0],
            re_max: 0.5,
            re_points: 201,
            c0: 0.0,
            im_points: 1,
            cutoff: Some(CutoffConfig { inner: 0.25, outer: 0.5 }),
        }
    }
}

impl ResolventConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.h.is_empty() || self.h.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
            return Err(validation(format!("h values must lie in (0, 1), got {:?}", self.h)));
        }
        if !(self.re_max >= 0.0) || !(self.c0 >= 0.0) {
            return Err(validation("re_max and c0 must be nonnegative"));
        }
        if self.re_points == 0 || self.im_points == 0 {
            return Err(validation("re_points and im_points must be at least 1"));
        }
        if let Some(c) = self.cutoff {
            if !(0.0 <= c.inner && c.inner < c.outer) {
                return Err(validation(format!("cutoff needs 0 <= inner < outer, got {} and {}", c.inner, c.outer)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DampedWaveConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub problem: DampedWaveProblem,
    pub initial: InitialData,
    pub t_max: f64,
}

impl Default for DampedWaveConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            problem: loxodrome::acceptance::damped_wave_problem(129),
            initial: InitialData::Gaussian { center: 1.5, width: 0.5 },
            t_max: 60.0,
        }
    }
}

impl DampedWaveConfig {
    pub fn validate(&self) -> CliResult<()> {
        positive("t_max", self.t_max)?;
        positive("epsilon", self.problem.epsilon)?;
        if self.problem.modes.is_empty() {
            return Err(validation("mode list is empty"));
        }
        match self.initial {
            InitialData::Gaussian { width, .. } => positive("initial.width", width)?,
            InitialData::RandomBand { band, .. } if band == 0 => return Err(validation("initial.band must be at least 1")),
            _ => {}
        }
        self.problem.validate()?;
        Ok(())
    }
}

/// Parses `"0-3,10,12"` into `[0, 1, 2, 3, 10, 12]`.
pub fn parse_ranges(s: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || validation(format!("cannot parse mode range {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(validation("empty mode list"));
    }
    Ok(out)
}
