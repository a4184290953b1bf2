//! Scenario files: a TOML tree describing species, initial state, backend,
//! what to integrate and which checks to run. Every field not marked
//! required has a default; see `SCHEMA.md`.

use std::path::Path;

use idbm::config_space::{Species, SpeciesTable, Statistics};
use idbm::dynamics::{IntegratorOptions, VelocityLaw, ANALYTIC_TOLERANCE, GRID_TOLERANCE};
use idbm::wavefunction::{GaussianPacket, GaussianState, Potential, PotentialTerm, WaveFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit")]
    pub hbar: f64,
    #[serde(default = "both_laws")]
    pub laws: Vec<VelocityLaw>,
    #[serde(default)]
    pub output: Option<String>,
    pub species: Vec<SpeciesSpec>,
    #[serde(default)]
    pub backend: BackendSpec,
    pub state: StateSpec,
    #[serde(default)]
    pub trajectories: Option<TrajectorySpec>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub compare: CompareSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    #[serde(default = "default_tag")]
    pub tag: String,
    pub mass: f64,
    #[serde(default = "one")]
    pub internal_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Gaussian,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_snapshot")]
    pub snapshot_spacing: f64,
    #[serde(default)]
    pub potential: Vec<PotentialTerm>,
}

impl Default for BackendSpec {
    fn default() -> Self {
        Self {
            kind: BackendKind::Gaussian,
            points: default_points(),
            length: default_length(),
            snapshot_spacing: default_snapshot(),
            potential: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    #[default]
    None,
    Boson,
    Fermion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default)]
    pub symmetry: Symmetry,
    pub packets: Vec<PacketSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default)]
    pub momentum: Option<Vec<f64>>,
    /// Internal state as [re, im] pairs; defaults to the first basis vector.
    #[serde(default)]
    pub spinor: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Flattened labeled start configurations, N·d numbers each.
    pub starts: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub samples: usize,
    pub times: Vec<f64>,
    #[serde(default = "default_reference")]
    pub reference_samples: usize,
    #[serde(default = "default_paired")]
    pub paired: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default)]
    pub reduction: bool,
    #[serde(default)]
    pub disjoint_reduction: bool,
    #[serde(default)]
    pub strong_invariance: bool,
    #[serde(default)]
    pub equivariance: bool,
    #[serde(default)]
    pub marginal_identity: bool,
    #[serde(default)]
    pub continuity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Integrator tolerance; 1e-8 for the analytic backend, 1e-5 for grids.
    #[serde(default)]
    pub ode: Option<f64>,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
    #[serde(default = "default_node_factor")]
    pub node_factor: f64,
    #[serde(default = "default_reduction")]
    pub reduction: f64,
    #[serde(default = "default_disjoint")]
    pub disjoint_reduction: f64,
    #[serde(default = "default_continuity")]
    pub continuity: f64,
    #[serde(default = "default_continuity_step")]
    pub continuity_step: f64,
    /// Identical-law agreement bound, in units of the ODE tolerance.
    #[serde(default = "default_agree_factor")]
    pub agree_factor: f64,
    /// Distinct-law separation bound, in units of the ODE tolerance.
    #[serde(default = "default_differ_factor")]
    pub differ_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Differ,
    Agree,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    #[serde(default)]
    pub expect: Option<Expectation>,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn both_laws() -> Vec<VelocityLaw> {
    vec![VelocityLaw::Standard, VelocityLaw::IdentityBased]
}
fn default_tag() -> String {
    "x".into()
}
fn default_points() -> usize {
    64
}
fn default_length() -> f64 {
    20.0
}
fn default_snapshot() -> f64 {
    0.01
}
fn default_reference() -> usize {
    100_000
}
fn default_paired() -> usize {
    50
}
fn default_initial_step() -> f64 {
    0.05
}
fn default_halvings() -> u32 {
    20
}
fn default_node_factor() -> f64 {
    1e-12
}
fn default_reduction() -> f64 {
    1e-10
}
fn default_disjoint() -> f64 {
    1e-8
}
fn default_continuity() -> f64 {
    1e-3
}
fn default_continuity_step() -> f64 {
    1e-3
}
fn default_agree_factor() -> f64 {
    10.0
}
fn default_differ_factor() -> f64 {
    1e3
}

/// Packets within this many widths of a grid edge are rejected.
pub const BOX_MARGIN_WIDTHS: f64 = 5.0;

/// A parsed scenario together with its source text, for diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub source: String,
    pub path: String,
}

impl LoadedScenario {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&source, &path.display().to_string())
    }

    pub fn parse(source: &str, path: &str) -> Result<Self, CliError> {
        let scenario: Scenario = toml::from_str(source).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(source, s.start)).unwrap_or(1);
            CliError::Config {
                path: path.into(),
                line,
                message: e.message().to_string(),
            }
        })?;
        let loaded = Self {
            scenario,
            source: source.into(),
            path: path.into(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn fail(&self, section: Option<(&str, usize)>, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line: locate(&self.source, section, key),
            message: message.into(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        let d = s.dim;
        let n = s.species.len();
        if d == 0 {
            return Err(self.fail(None, "dim", "dim must be at least 1"));
        }
        if n == 0 {
            return Err(self.fail(None, "name", "at least one [[species]] entry is required"));
        }
        if n > idbm::config_space::DEFAULT_MAX_PARTICLES {
            return Err(self.fail(
                Some(("species", n - 1)),
                "mass",
                format!("{n} particles exceed the limit of {}", idbm::config_space::DEFAULT_MAX_PARTICLES),
            ));
        }
        if !(s.hbar > 0.0) {
            return Err(self.fail(None, "hbar", "hbar must be positive"));
        }
        if s.laws.is_empty() {
            return Err(self.fail(None, "laws", "laws must name at least one guidance law"));
        }
        for (i, sp) in s.species.iter().enumerate() {
            if !(sp.mass > 0.0 && sp.mass.is_finite()) {
                return Err(self.fail(Some(("species", i)), "mass", format!("species {} mass must be positive", i + 1)));
            }
            if sp.internal_dim == 0 {
                return Err(self.fail(Some(("species", i)), "internal_dim", "internal_dim must be at least 1"));
            }
        }
        if s.state.packets.len() != n {
            return Err(self.fail(
                Some(("state", 0)),
                "symmetry",
                format!("{} packets given for {n} particles", s.state.packets.len()),
            ));
        }
        if s.state.symmetry != Symmetry::None {
            let first = &s.species[0];
            if s.species.iter().any(|p| p.mass != first.mass || p.internal_dim != first.internal_dim) {
                return Err(self.fail(
                    Some(("state", 0)),
                    "symmetry",
                    "symmetrized states need identical species",
                ));
            }
        }
        for (i, p) in s.state.packets.iter().enumerate() {
            let at = Some(("state.packets", i));
            if p.center.len() != d {
                return Err(self.fail(at, "center", format!("packet {} center needs {d} components", i + 1)));
            }
            if p.momentum.as_ref().is_some_and(|k| k.len() != d) {
                return Err(self.fail(at, "momentum", format!("packet {} momentum needs {d} components", i + 1)));
            }
            if !(p.width > 0.0) {
                return Err(self.fail(at, "width", format!("packet {} width must be positive", i + 1)));
            }
            if let Some(sp) = &p.spinor {
                if sp.len() != s.species[i].internal_dim {
                    return Err(self.fail(
                        at,
                        "spinor",
                        format!("packet {} spinor needs {} components", i + 1, s.species[i].internal_dim),
                    ));
                }
            }
            if s.backend.kind == BackendKind::Grid {
                let margin = BOX_MARGIN_WIDTHS * p.width;
                if p.center.iter().any(|&c| c < margin || c > s.backend.length - margin) {
                    return Err(self.fail(
                        at,
                        "center",
                        format!(
                            "packet {} lies within {BOX_MARGIN_WIDTHS} widths of the box edge [0, {}]",
                            i + 1,
                            s.backend.length
                        ),
                    ));
                }
            }
        }
        match s.backend.kind {
            BackendKind::Gaussian => {
                if !s.backend.potential.is_empty() {
                    return Err(self.fail(
                        Some(("backend", 0)),
                        "kind",
                        "the analytic backend is free; use kind = \"grid\" with a potential",
                    ));
                }
                if s.checks.continuity {
                    return Err(self.fail(Some(("checks", 0)), "continuity", "the continuity check needs the grid backend"));
                }
            }
            BackendKind::Grid => {
                if s.backend.points < 4 || s.backend.points % 2 != 0 {
                    return Err(self.fail(Some(("backend", 0)), "points", "points must be an even number of at least 4"));
                }
                if !(s.backend.length > 0.0) {
                    return Err(self.fail(Some(("backend", 0)), "length", "length must be positive"));
                }
                if !(s.backend.snapshot_spacing > 0.0) {
                    return Err(self.fail(Some(("backend", 0)), "snapshot_spacing", "snapshot_spacing must be positive"));
                }
                if s.backend.points.checked_pow((n * d) as u32).is_none_or(|m| m > 1 << 24) {
                    return Err(self.fail(Some(("backend", 0)), "points", "grid exceeds 2^24 nodes"));
                }
            }
        }
        if let Some(t) = &s.trajectories {
            for (i, start) in t.starts.iter().enumerate() {
                if start.len() != n * d {
                    return Err(self.fail(
                        Some(("trajectories", 0)),
                        "starts",
                        format!("start {} needs {} coordinates", i + 1, n * d),
                    ));
                }
            }
            check_times(&t.times).map_err(|m| self.fail(Some(("trajectories", 0)), "times", m))?;
        }
        if let Some(e) = &s.ensemble {
            if e.samples < idbm::ensemble::MIN_SAMPLES {
                return Err(self.fail(
                    Some(("ensemble", 0)),
                    "samples",
                    format!("samples must be at least {}", idbm::ensemble::MIN_SAMPLES),
                ));
            }
            check_times(&e.times).map_err(|m| self.fail(Some(("ensemble", 0)), "times", m))?;
        }
        let c = &s.checks;
        if (c.equivariance || c.marginal_identity) && s.ensemble.is_none() {
            return Err(self.fail(Some(("checks", 0)), "equivariance", "ensemble checks need an [ensemble] section"));
        }
        if c.strong_invariance && s.trajectories.is_none() {
            return Err(self.fail(
                Some(("checks", 0)),
                "strong_invariance",
                "strong_invariance needs a [trajectories] section",
            ));
        }
        self.wavefunction()
            .map_err(|e| self.fail(Some(("state", 0)), "packets", format!("initial state: {e}")))?;
        Ok(())
    }

    pub fn hash(&self) -> String {
        scenario_hash(&self.scenario)
    }

    pub fn species(&self) -> Result<SpeciesTable, idbm::Error> {
        let s = &self.scenario;
        SpeciesTable::new(
            s.species
                .iter()
                .map(|p| Species::new(p.mass, p.internal_dim, p.tag.clone()))
                .collect(),
            s.hbar,
        )
    }

    pub fn potential(&self) -> Potential {
        Potential {
            terms: self.scenario.backend.potential.clone(),
        }
    }

    /// ψ₀ on the configured backend.
    pub fn wavefunction(&self) -> Result<WaveFunction, idbm::Error> {
        let s = &self.scenario;
        let species = self.species()?;
        let packets: Vec<GaussianPacket> = s
            .state
            .packets
            .iter()
            .map(|p| {
                let k = p.momentum.clone().unwrap_or_else(|| vec![0.0; s.dim]);
                let g = GaussianPacket::new(p.center.clone(), p.width, k);
                match &p.spinor {
                    Some(sp) => g.with_spinor(sp.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()),
                    None => g,
                }
            })
            .collect();
        let state = match s.state.symmetry {
            Symmetry::None => GaussianState::product(&species, s.dim, packets)?,
            Symmetry::Boson => GaussianState::symmetrized(&species, s.dim, packets, Statistics::Boson)?,
            Symmetry::Fermion => GaussianState::symmetrized(&species, s.dim, packets, Statistics::Fermion)?,
        };
        let psi = WaveFunction::gaussian(species, state)?;
        match s.backend.kind {
            BackendKind::Gaussian => Ok(psi),
            BackendKind::Grid => psi.to_grid(s.backend.points, s.backend.length, self.potential()),
        }
    }

    pub fn ode_tolerance(&self) -> f64 {
        self.scenario.tolerances.ode.unwrap_or(match self.scenario.backend.kind {
            BackendKind::Gaussian => ANALYTIC_TOLERANCE,
            BackendKind::Grid => GRID_TOLERANCE,
        })
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        let t = &self.scenario.tolerances;
        IntegratorOptions {
            tolerance: self.ode_tolerance(),
            initial_step: t.initial_step,
            max_halvings: t.max_halvings,
            node_factor: t.node_factor,
            ..IntegratorOptions::default()
        }
    }

    /// Latest time any part of the scenario observes.
    pub fn horizon(&self) -> f64 {
        let s = &self.scenario;
        let mut t: f64 = 0.0;
        for times in [s.trajectories.as_ref().map(|x| &x.times), s.ensemble.as_ref().map(|x| &x.times)]
            .into_iter()
            .flatten()
        {
            t = times.iter().copied().fold(t, f64::max);
        }
        t
    }
}

fn check_times(times: &[f64]) -> Result<(), String> {
    if times.is_empty() {
        return Err("times must not be empty".into());
    }
    if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err("times must be positive and strictly increasing".into());
    }
    Ok(())
}

/// SHA-256 of the scenario's canonical JSON form: insensitive to layout,
/// comments and key order, sensitive to every value.
pub fn scenario_hash(s: &Scenario) -> String {
    let value = serde_json::to_value(s).expect("scenario serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Best-effort line of `key` inside the `index`-th occurrence of a table
/// (or array-of-tables) header, or at top level when `section` is None.
fn locate(source: &str, section: Option<(&str, usize)>, key: &str) -> usize {
    let mut current: Option<(String, usize)> = None;
    let mut seen: std::collections::HashMap<String, usize> = Default::default();
    let mut header_line = None;
    for (no, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            let count = seen.entry(name.clone()).or_insert(0);
            current = Some((name.clone(), *count));
            *count += 1;
            if section.is_some_and(|(s, i)| s == name && i + 1 == *count) {
                header_line = Some(no + 1);
            }
            continue;
        }
        let here = match (&current, section) {
            (None, None) => true,
            (Some((name, i)), Some((s, want))) => name == s && *i == want,
            _ => false,
        };
        if here {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return no + 1;
                }
            }
        }
    }
    header_line.unwrap_or(1)
}
