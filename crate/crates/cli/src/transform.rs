//! ψ ↔ φ dump: fiber values of the lifted section at listed point sets.

use std::path::Path;

use idbm::bundle::{lift, restrict, FiberElement};
use idbm::config_space::{canonicalize, LabeledConfiguration};
use idbm::wavefunction::WaveFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformEntry {
    /// Points in the order given.
    pub points: Vec<Vec<f64>>,
    /// ψ at the given ordering as [re, im] pairs.
    pub psi: Vec<[f64; 2]>,
    pub fiber: FiberElement,
    /// Whether restricting the fiber element to the given ordering
    /// reproduces ψ exactly.
    pub round_trip: bool,
}

/// Reads a JSON list of configurations, each a list of points.
pub fn read_configs(path: &Path) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn transform(psi: &WaveFunction, configs: &[Vec<Vec<f64>>]) -> Result<Vec<TransformEntry>, CliError> {
    configs
        .iter()
        .map(|points| {
            let c = LabeledConfiguration::new(psi.dim(), points.concat())?;
            let (q, _) = canonicalize(&c)?;
            let fiber = lift(psi, &q)?;
            let value = psi.evaluate(&c)?;
            let round_trip = restrict(&fiber, &c)? == value;
            Ok(TransformEntry {
                points: points.clone(),
                psi: value.0.iter().map(|z| [z.re, z.im]).collect(),
                fiber,
                round_trip,
            })
        })
        .collect()
}
