//! Scenario-driven runner for the `idbm` simulation library.

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;
pub mod selftest;
pub mod transform;

pub use error::CliError;
pub use run::{compare, run, CheckResult, CompareOutcome, RunManifest, RunOptions};
pub use scenario::{scenario_hash, LoadedScenario, Scenario};
pub use selftest::{selftest, SelftestOptions};
pub use transform::{read_configs, transform, TransformEntry};
