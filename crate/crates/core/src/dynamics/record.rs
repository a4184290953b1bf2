use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::velocity::VelocityLaw;
use crate::config_space::LabeledConfiguration;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    AbortedNearNode,
    AbortedOutOfBox,
}

impl TrajectoryStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrajectoryStatus::Completed => "completed",
            TrajectoryStatus::AbortedNearNode => "aborted_near_node",
            TrajectoryStatus::AbortedOutOfBox => "aborted_out_of_box",
        }
    }
}

/// Diagnostics accumulated since the previous recorded row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    pub steps: u32,
    pub halvings: u32,
    pub node_rejections: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub law: VelocityLaw,
    pub dim: usize,
    pub n_particles: usize,
    pub times: Vec<f64>,
    /// Flat slot-major coordinates per recorded time; canonical point order
    /// when the run re-canonicalizes.
    pub states: Vec<Vec<f64>>,
    pub flags: Vec<StepFlags>,
    pub status: TrajectoryStatus,
}

impl TrajectoryRecord {
    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, row: usize) -> Result<LabeledConfiguration> {
        LabeledConfiguration::new(self.dim, self.states[row].clone())
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Row index of the recorded time closest to t.
    pub fn row_at(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }

    pub fn total_flags(&self) -> StepFlags {
        self.flags.iter().fold(StepFlags::default(), |acc, f| StepFlags {
            steps: acc.steps + f.steps,
            halvings: acc.halvings + f.halvings,
            node_rejections: acc.node_rejections + f.node_rejections,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t");
        for i in 0..self.n_particles {
            for k in 0..self.dim {
                let _ = write!(h, ",x{}_{}", i + 1, k + 1);
            }
        }
        h.push_str(",steps,halvings,node_rejections,status");
        h
    }

    /// One header line, then `t, coordinates, flags, status` per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for ((t, x), f) in self.times.iter().zip(&self.states).zip(&self.flags) {
            let mut line = format!("{t:.17e}");
            for v in x {
                let _ = write!(line, ",{v:.17e}");
            }
            let _ = write!(
                line,
                ",{},{},{},{}",
                f.steps,
                f.halvings,
                f.node_rejections,
                self.status.name()
            );
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::InvalidState(e.to_string()))
    }
}
