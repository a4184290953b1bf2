//! Artifact writers: trajectory CSVs, gnuplot data blocks and scripts,
//! density heatmap tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use idbm::dynamics::{GridHistory, TrajectoryRecord};

use crate::error::CliError;

/// Collects written paths relative to one output directory.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Gnuplot data: one block per trajectory, `t x1_1 ...` per row, blocks
/// separated by two blank lines so `index i` selects trajectory i.
pub fn trajectory_blocks(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(out, "# trajectory {} ({})", i + 1, r.status.name());
        for (t, x) in r.times.iter().zip(&r.states) {
            let _ = write!(out, "{t:.10e}");
            for v in x {
                let _ = write!(out, " {v:.10e}");
            }
            out.push('\n');
        }
        out.push_str("\n\n");
    }
    out
}

pub fn trajectory_script(data: &str, coordinates: usize, title: &str) -> String {
    let mut out = format!(
        "set title '{title}'\nset xlabel 't'\nset ylabel 'coordinate'\nset key off\nplot "
    );
    let plots: Vec<String> = (0..coordinates)
        .map(|c| format!("'{data}' using 1:{} with lines lw 1.5", c + 2))
        .collect();
    out.push_str(&plots.join(", \\\n     "));
    out.push('\n');
    out
}

/// `t x ρ_i(x)` rows, one block per snapshot, for a d = 1 grid history.
pub fn density_table(history: &GridHistory, particle: usize, every: usize) -> String {
    let mut out = String::from("# t x marginal_density\n");
    for g in history.snapshots().iter().step_by(every.max(1)) {
        let h = g.spacing();
        for (j, rho) in g.marginal_table(particle, 0).iter().enumerate() {
            let _ = writeln!(out, "{:.6e} {:.6e} {:.6e}", g.time(), j as f64 * h, rho);
        }
        out.push('\n');
    }
    out
}

pub fn density_script(data: &str, particle: usize) -> String {
    format!(
        "set title 'marginal density of particle {}'\nset xlabel 't'\nset ylabel 'x'\nset view map\n\
         set pm3d map\nsplot '{data}' using 1:2:3 with pm3d notitle\n",
        particle + 1
    )
}
