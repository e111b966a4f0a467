//! Experiment configuration: TOML (or JSON) file, validated before any computation.

use extmix::compact_group::{Backend, Irrep};
use extmix::fourier::TrigSeries;
use extmix::symbolic_model::{ExpandingModel, HolonomyCocycle, RoofFunction};
use extmix::thermo::Potential;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A schema problem, reported with the offending field path.
#[derive(Debug)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

fn schema(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub model: ModelSpec,
    pub potential: PotentialSpec,
    pub roof: SeriesSpec,
    pub cocycle: CocycleSpec,
    pub thermo: ThermoSection,
    pub spectrum: SpectrumSection,
    pub access: AccessSection,
    pub correlate: CorrelateSection,
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Doubling,
    Tripling,
    Perturbed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Number of branches, perturbed family only.
    pub k: Option<usize>,
    /// Perturbation amplitude, perturbed family only.
    pub a: Option<f64>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { kind: ModelKind::Doubling, k: None, a: None }
    }
}

/// `c0 + sum cos[j] cos(2 pi (j+1) u) + sin[j] sin(2 pi (j+1) u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSpec {
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        // the benchmark roof 1 + 0.3 cos(2 pi u)
        Self { c0: 1.0, cos: vec![0.3], sin: vec![] }
    }
}

impl SeriesSpec {
    fn zero() -> Self {
        Self { c0: 0.0, cos: vec![], sin: vec![] }
    }

    fn series(&self, path: &str) -> Result<TrigSeries, SchemaError> {
        if !self.c0.is_finite() || self.cos.iter().chain(&self.sin).any(|c| !c.is_finite()) {
            return Err(schema(path, "coefficients must be finite"));
        }
        Ok(TrigSeries::new(self.c0, self.cos.clone(), self.sin.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Trig,
    SqrtCusp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub series: Option<SeriesSpec>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self { kind: PotentialKind::Zero, series: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocycleKind {
    So2Benchmark,
    Su2Benchmark,
    Trivial,
    So2Angle,
    Su2Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    So2,
    Su2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    pub kind: CocycleKind,
    /// Group for the trivial cocycle.
    pub group: Option<GroupName>,
    /// Winding of `so2_angle`.
    pub winding: Option<i32>,
    /// Angle series of `so2_angle`.
    pub series: Option<SeriesSpec>,
    /// Coordinate series of `su2_exp`.
    pub x: Option<SeriesSpec>,
    pub y: Option<SeriesSpec>,
    pub z: Option<SeriesSpec>,
}

impl Default for CocycleSpec {
    fn default() -> Self {
        Self { kind: CocycleKind::So2Benchmark, group: None, winding: None, series: None, x: None, y: None, z: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermoSection {
    pub grid: usize,
    pub tol: f64,
    pub out: String,
}

impl Default for ThermoSection {
    fn default() -> Self {
        Self { grid: 4096, tol: extmix::thermo::DEFAULT_TOL, out: "pressure.json".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// `n` for SO(2), `j` (e.g. "1/2") for SU(2).
    pub irrep: String,
    pub im_z: Vec<f64>,
    pub iters: usize,
    pub family: usize,
    pub bandwidth: usize,
    pub out: String,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { irrep: "1".into(), im_z: vec![0.0, 1.0, 10.0, 100.0], iters: 40, family: 5, bandwidth: 4, out: "spectrum.csv".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessSection {
    pub depth: usize,
    pub pasts: usize,
    pub grid: usize,
    pub irrep: String,
    pub mesh_points: usize,
    pub out: String,
}

impl Default for AccessSection {
    fn default() -> Self {
        Self { depth: 20, pasts: 64, grid: 256, irrep: "1".into(), mesh_points: 80, out: "access.json".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateSection {
    pub k: usize,
    pub tmax: f64,
    pub dt: f64,
    pub samples: usize,
    pub grid: usize,
    pub out: String,
}

impl Default for CorrelateSection {
    fn default() -> Self {
        Self { k: 1, tmax: 20.0, dt: 0.5, samples: 1_000_000, grid: 1024, out: "correlation.csv".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub dichotomy_trials: usize,
    pub cancellation_pairs: usize,
    pub kernel_eps: f64,
    /// Recorded constant for the Fourier decay ratios.
    pub fourier_bound: f64,
    pub out: String,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { dichotomy_trials: 1000, cancellation_pairs: 100_000, kernel_eps: 0.05, fourier_bound: 1.0, out: "verify.csv".into() }
    }
}

/// The config file as read, plus its bytes for hashing.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub bytes: Vec<u8>,
}

/// Read a `.toml` or `.json` config; a missing path gives the defaults.
pub fn load(path: Option<&Path>) -> Result<Loaded, SchemaError> {
    let Some(path) = path else {
        return Ok(Loaded { config: ExperimentConfig::default(), bytes: Vec::new() });
    };
    let bytes = std::fs::read(path).map_err(|e| schema("<file>", format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| schema("<file>", "config is not UTF-8"))?;
    let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text).map_err(|e| schema("<json>", e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| key_at(text, s.start)).unwrap_or_else(|| "<toml>".into());
            schema(&at, e.message().to_string())
        })?
    };
    config.validate()?;
    Ok(Loaded { config, bytes })
}

/// Best-effort `table.key` for a byte offset in TOML text.
fn key_at(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    for (start, line) in text.lines().scan(0, |pos, l| {
        let s = *pos;
        *pos += l.len() + 1;
        Some((s, l))
    }) {
        if start > offset {
            break;
        }
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            table = name.trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

/// `n` for SO(2); `j` as an integer, half-integer fraction or decimal for SU(2).
pub fn parse_irrep(s: &str, backend: Backend, path: &str) -> Result<Irrep, SchemaError> {
    let s = s.trim();
    match backend {
        Backend::So2 => s.parse::<i32>().map(|n| Irrep::So2 { n }).map_err(|_| schema(path, format!("`{s}` is not an integer character"))),
        Backend::Su2 => {
            let j = match s.split_once('/') {
                Some((a, "2")) => a.trim().parse::<u32>().ok().map(f64::from).map(|a| a / 2.0),
                Some(_) => None,
                None => s.parse::<f64>().ok(),
            };
            match j {
                Some(j) if j >= 0.0 && (2.0 * j).fract() == 0.0 => Ok(Irrep::Su2 { two_j: (2.0 * j) as u32 }),
                _ => Err(schema(path, format!("`{s}` is not a spin (0, 1/2, 1, ...)"))),
            }
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SchemaError> {
        self.model()?;
        self.potential()?;
        self.roof()?;
        self.cocycle()?;
        let positive = |v: usize, p: &str| if v == 0 { Err(schema(p, "must be positive")) } else { Ok(()) };
        if self.thermo.grid < 16 {
            return Err(schema("thermo.grid", "need at least 16 nodes"));
        }
        if !(self.thermo.tol > 0.0 && self.thermo.tol < 1e-3) {
            return Err(schema("thermo.tol", "must lie in (0, 1e-3)"));
        }
        parse_irrep(&self.spectrum.irrep, self.backend(), "spectrum.irrep")?;
        parse_irrep(&self.access.irrep, self.backend(), "access.irrep")?;
        positive(self.spectrum.iters, "spectrum.iters")?;
        positive(self.spectrum.family, "spectrum.family")?;
        positive(self.spectrum.bandwidth, "spectrum.bandwidth")?;
        if self.spectrum.im_z.iter().any(|v| !v.is_finite()) {
            return Err(schema("spectrum.im_z", "values must be finite"));
        }
        positive(self.access.depth, "access.depth")?;
        if self.access.pasts < 2 {
            return Err(schema("access.pasts", "need at least 2 pasts"));
        }
        positive(self.access.grid, "access.grid")?;
        positive(self.access.mesh_points, "access.mesh_points")?;
        positive(self.correlate.k, "correlate.k")?;
        if !(self.correlate.tmax > 0.0 && self.correlate.dt > 0.0 && self.correlate.dt <= self.correlate.tmax) {
            return Err(schema("correlate.dt", "need 0 < dt <= tmax"));
        }
        if self.correlate.samples < 1000 {
            return Err(schema("correlate.samples", "need at least 1000 samples"));
        }
        if self.correlate.grid < 16 {
            return Err(schema("correlate.grid", "need at least 16 nodes"));
        }
        if !(self.verify.kernel_eps > 0.0 && self.verify.kernel_eps < 0.1) {
            return Err(schema("verify.kernel_eps", "must lie in (0, 0.1)"));
        }
        positive(self.verify.dichotomy_trials, "verify.dichotomy_trials")?;
        positive(self.verify.cancellation_pairs, "verify.cancellation_pairs")?;
        Ok(())
    }

    pub fn model(&self) -> Result<ExpandingModel, SchemaError> {
        let m = &self.model;
        match m.kind {
            ModelKind::Doubling | ModelKind::Tripling => {
                if m.k.is_some() || m.a.is_some() {
                    return Err(schema("model", "`k` and `a` only apply to kind = \"perturbed\""));
                }
                Ok(if m.kind == ModelKind::Doubling { ExpandingModel::Doubling } else { ExpandingModel::Tripling })
            }
            ModelKind::Perturbed => {
                let k = m.k.ok_or_else(|| schema("model.k", "required for kind = \"perturbed\""))?;
                let a = m.a.ok_or_else(|| schema("model.a", "required for kind = \"perturbed\""))?;
                if k < 2 {
                    return Err(schema("model.k", "need at least 2 branches"));
                }
                if !(a.abs() < 1.0) {
                    return Err(schema("model.a", "need |a| < 1 for expansion"));
                }
                Ok(ExpandingModel::Perturbed { k, a })
            }
        }
    }

    pub fn potential(&self) -> Result<Potential, SchemaError> {
        let p = &self.potential;
        match (p.kind, &p.series) {
            (PotentialKind::Zero, None) => Ok(Potential::zero()),
            (PotentialKind::Trig, Some(s)) => Ok(Potential::trig(s.series("potential.series")?)),
            (PotentialKind::Trig, None) => Err(schema("potential.series", "required for kind = \"trig\"")),
            (PotentialKind::SqrtCusp, None) => Ok(Potential::holder(0.5, extmix::thermo::sqrt_cusp)),
            (_, Some(_)) => Err(schema("potential.series", "only applies to kind = \"trig\"")),
        }
    }

    pub fn roof(&self) -> Result<RoofFunction, SchemaError> {
        RoofFunction::new(self.roof.series("roof")?).map_err(|e| schema("roof", e.to_string()))
    }

    pub fn backend(&self) -> Backend {
        match (self.cocycle.kind, self.cocycle.group) {
            (CocycleKind::Su2Benchmark | CocycleKind::Su2Exp, _) | (CocycleKind::Trivial, Some(GroupName::Su2)) => Backend::Su2,
            _ => Backend::So2,
        }
    }

    pub fn cocycle(&self) -> Result<HolonomyCocycle, SchemaError> {
        let c = &self.cocycle;
        let extra = |allowed: &[&str]| -> Result<(), SchemaError> {
            let set = [
                ("group", c.group.is_some()),
                ("winding", c.winding.is_some()),
                ("series", c.series.is_some()),
                ("x", c.x.is_some()),
                ("y", c.y.is_some()),
                ("z", c.z.is_some()),
            ];
            match set.iter().find(|(name, present)| *present && !allowed.contains(name)) {
                Some((name, _)) => Err(schema(&format!("cocycle.{name}"), format!("not used by kind = {:?}", c.kind))),
                None => Ok(()),
            }
        };
        match c.kind {
            CocycleKind::So2Benchmark => extra(&[]).map(|_| HolonomyCocycle::so2_benchmark()),
            CocycleKind::Su2Benchmark => extra(&[]).map(|_| HolonomyCocycle::su2_benchmark()),
            CocycleKind::Trivial => {
                extra(&["group"])?;
                Ok(HolonomyCocycle::Trivial(self.backend()))
            }
            CocycleKind::So2Angle => {
                extra(&["winding", "series"])?;
                let series = c.series.clone().unwrap_or_else(SeriesSpec::zero).series("cocycle.series")?;
                Ok(HolonomyCocycle::So2Angle { winding: c.winding.unwrap_or(0), series })
            }
            CocycleKind::Su2Exp => {
                extra(&["x", "y", "z"])?;
                let part = |s: &Option<SeriesSpec>, p: &str| s.clone().unwrap_or_else(SeriesSpec::zero).series(p);
                Ok(HolonomyCocycle::Su2Exp { x: part(&c.x, "cocycle.x")?, y: part(&c.y, "cocycle.y")?, z: part(&c.z, "cocycle.z")? })
            }
        }
    }
}
