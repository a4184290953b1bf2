use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idbm::dynamics::VelocityLaw;
use idbm_cli::{
    compare, read_configs, run, selftest, transform, CliError, LoadedScenario, RunOptions, SelftestOptions,
};

/// Standard and identity-based Bohmian trajectories from scenario files.
#[derive(Debug, Parser)]
#[command(name = "idbm", version)]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's `output`, else out/<name>).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Progress messages on stderr.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate trajectories, write artifacts and run the enabled checks.
    Run { scenario: PathBuf },
    /// Trajectory divergence and marginal statistics of two guidance laws.
    Compare {
        scenario: PathBuf,
        #[arg(long, default_value = "standard")]
        law_a: VelocityLaw,
        #[arg(long, default_value = "identity_based")]
        law_b: VelocityLaw,
    },
    /// Reduced-scale invariant suite.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Scale applied to every upper-bound tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Lift ψ to fiber values at the configurations listed in a JSON file.
    Transform {
        scenario: PathBuf,
        #[arg(long)]
        configs: PathBuf,
        /// Evolve ψ to this time first.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let opts = RunOptions {
        seed: cli.seed,
        output: cli.output.clone(),
        verbose: cli.verbose > 0,
    };
    match cli.command {
        Command::Run { scenario } => {
            let loaded = LoadedScenario::from_file(&scenario)?;
            let manifest = run(&loaded, &opts)?;
            for c in &manifest.checks {
                println!("{}", c.line());
            }
            println!(
                "{} {} ({} artifacts, {:.1}s, hash {})",
                if manifest.passed { "PASS" } else { "FAIL" },
                manifest.scenario,
                manifest.artifacts.len(),
                manifest.wall_clock_seconds,
                &manifest.scenario_hash[..12]
            );
            Ok(manifest.passed)
        }
        Command::Compare { scenario, law_a, law_b } => {
            let loaded = LoadedScenario::from_file(&scenario)?;
            let outcome = compare(&loaded, law_a, law_b, &opts)?;
            let c = &outcome.comparison;
            println!("trajectory divergence {:.4e} over {} pairs", c.divergence, c.paired_trajectories);
            for a in &c.axes {
                println!("{}: D = {:.4e}, threshold {:.4e}", a.label, a.statistic, a.threshold);
            }
            if let (Some(e), Some(met)) = (outcome.expectation, outcome.expectation_met) {
                println!("expectation {e:?}: {}", if met { "met" } else { "not met" });
            }
            println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
            Ok(outcome.passed)
        }
        Command::Selftest { samples, tolerance_scale } => {
            let checks = selftest(&SelftestOptions {
                samples,
                seed: cli.seed.unwrap_or(1),
                tolerance_scale,
                verbose: opts.verbose,
            })?;
            for c in &checks {
                println!("{}", c.line());
            }
            let passed = checks.iter().all(|c| c.passed);
            if let Some(dir) = &cli.output {
                std::fs::create_dir_all(dir)?;
                std::fs::write(
                    dir.join("selftest.json"),
                    serde_json::to_string_pretty(&checks).expect("checks serialize"),
                )?;
            }
            println!("{}", if passed { "PASS selftest" } else { "FAIL selftest" });
            Ok(passed)
        }
        Command::Transform { scenario, configs, time } => {
            let loaded = LoadedScenario::from_file(&scenario)?;
            let psi = loaded.wavefunction()?;
            let psi = if time > 0.0 { psi.at(time)? } else { psi };
            let entries = transform(&psi, &read_configs(&configs)?)?;
            let json = serde_json::to_string_pretty(&entries).expect("entries serialize");
            match &cli.output {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("transform.json"), json)?;
                }
                None => {
                    let _ = writeln!(std::io::stdout().lock(), "{json}");
                }
            }
            Ok(entries.iter().all(|e| e.round_trip))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
