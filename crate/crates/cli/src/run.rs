//! The `run` and `compare` subcommands.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use idbm::config_space::{canonicalize, LabeledConfiguration, Permutation};
use idbm::dynamics::{
    standard_velocity, strong_permutation_invariance_check, symmetrized_velocity, PsiTrack, TrajectoryRecord,
    VelocityLaw,
};
use idbm::ensemble::{
    compare_laws, continuity_residual_scan, equivariance_report, propagate_ensemble, run_ensemble, sample_branch,
    EnsembleSpec, LawComparison,
};
use idbm::wavefunction::WaveFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{density_script, density_table, trajectory_blocks, trajectory_script, Artifacts};
use crate::scenario::{BackendKind, Expectation, LoadedScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

impl CheckResult {
    fn below(name: impl Into<String>, measured: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= limit,
            measured,
            limit,
            detail: detail.into(),
        }
    }

    fn above(name: impl Into<String>, measured: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured > limit,
            measured,
            limit,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.4e}, limit {:.4e}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.limit,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub scenario_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub verbose: bool,
}

impl RunOptions {
    fn say(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn output_dir(&self, loaded: &LoadedScenario) -> PathBuf {
        self.output.clone().unwrap_or_else(|| match &loaded.scenario.output {
            Some(o) => PathBuf::from(o),
            None => PathBuf::from("out").join(&loaded.scenario.name),
        })
    }
}

struct Context<'a> {
    loaded: &'a LoadedScenario,
    psi: WaveFunction,
    track: Option<PsiTrack>,
    seed: u64,
    tau: f64,
}

impl<'a> Context<'a> {
    fn new(loaded: &'a LoadedScenario, opts: &RunOptions) -> Result<Self, CliError> {
        let psi = loaded.wavefunction()?;
        let horizon = loaded.horizon();
        let track = if horizon > 0.0 {
            opts.say(format!("preparing wave function up to t = {horizon}"));
            Some(PsiTrack::new(&psi, horizon, loaded.scenario.backend.snapshot_spacing)?)
        } else {
            None
        };
        Ok(Self {
            loaded,
            psi,
            track,
            seed: opts.seed.unwrap_or(loaded.scenario.seed),
            tau: loaded.ode_tolerance(),
        })
    }

    fn track(&self) -> Result<&PsiTrack, CliError> {
        self.track
            .as_ref()
            .ok_or_else(|| CliError::Usage("scenario has no observation times".into()))
    }

    fn ensemble_spec(&self, law: VelocityLaw) -> Result<(EnsembleSpec, usize, usize), CliError> {
        let e = self.loaded.scenario.ensemble.as_ref().ok_or_else(|| {
            CliError::Config {
                path: self.loaded.path.clone(),
                line: 1,
                message: "an [ensemble] section is required".into(),
            }
        })?;
        let spec = EnsembleSpec::new(e.samples, self.seed, law, e.times.clone())
            .with_options(self.loaded.integrator_options());
        Ok((spec, e.reference_samples, e.paired))
    }
}

/// Executes a scenario: trajectories, plot data, enabled checks, manifest.
pub fn run(loaded: &LoadedScenario, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let ctx = Context::new(loaded, opts)?;
    let mut out = Artifacts::new(opts.output_dir(loaded))?;
    let s = &loaded.scenario;
    let n_coords = ctx.psi.n_particles() * ctx.psi.dim();

    if let Some(spec) = &s.trajectories {
        let starts: Vec<LabeledConfiguration> = spec
            .starts
            .iter()
            .map(|x| LabeledConfiguration::new(s.dim, x.clone()))
            .collect::<Result<_, _>>()?;
        for &law in &s.laws {
            opts.say(format!("integrating {} trajectories under the {} law", starts.len(), law.name()));
            let ens = EnsembleSpec::new(starts.len(), ctx.seed, law, spec.times.clone())
                .with_options(loaded.integrator_options());
            let records = propagate_ensemble(&ens, ctx.track()?, &starts, ctx.psi.time())?;
            write_trajectories(&mut out, law, &records, n_coords)?;
        }
    }

    if s.backend.kind == BackendKind::Grid && s.dim == 1 {
        if let Some(history) = ctx.track.as_ref().and_then(|t| t.grid_history()) {
            let every = (history.snapshots().len() / 200).max(1);
            for p in 0..ctx.psi.n_particles() {
                let data = format!("density_{}.dat", p + 1);
                out.write(&data, &density_table(history, p, every))?;
                out.write(&format!("density_{}.gp", p + 1), &density_script(&data, p))?;
            }
        }
    }

    let mut checks = Vec::new();
    let c = &s.checks;
    if c.reduction {
        checks.push(reduction_check(&ctx)?);
    }
    if c.disjoint_reduction {
        checks.push(disjoint_check(&ctx)?);
    }
    if c.strong_invariance {
        checks.extend(strong_invariance_checks(&ctx)?);
    }
    if c.equivariance {
        for &law in &s.laws {
            opts.say(format!("equivariance ensemble under the {} law", law.name()));
            let (spec, reference, _) = ctx.ensemble_spec(law)?;
            let records = run_ensemble(&spec, &ctx.psi, ctx.track()?)?;
            let report = equivariance_report(&spec, &records, ctx.track()?, reference)?;
            out.write(&format!("equivariance_{}.json", law.name()), &report.to_json())?;
            out.write(&format!("equivariance_{}.tsv", law.name()), &report.to_tsv())?;
            let worst = report.entries.iter().map(|e| e.max_ratio()).fold(0.0, f64::max);
            let aborted = report.entries.iter().map(|e| e.aborted_fraction).fold(0.0, f64::max);
            let mut check = CheckResult::below(
                format!("equivariance_{}", law.name()),
                worst,
                1.0,
                format!("KS statistic over 1% threshold, {} samples, aborted {aborted:.4}", spec.samples),
            );
            check.passed = report.passed();
            checks.push(check);
        }
    }
    if c.marginal_identity {
        opts.say("marginal identity ensembles");
        let comparison = comparison(&ctx, VelocityLaw::Standard, VelocityLaw::IdentityBased)?;
        out.write("marginal_identity.json", &comparison.to_json())?;
        let worst = comparison.axes.iter().map(|a| a.statistic / a.threshold).fold(0.0, f64::max);
        let mut check = CheckResult::below(
            "marginal_identity",
            worst,
            1.0,
            format!("two-sample KS over threshold; trajectory divergence {:.3e}", comparison.divergence),
        );
        check.passed = comparison.statistics_agree();
        checks.push(check);
    }
    if c.continuity {
        for &law in &s.laws {
            let r = continuity_residual_scan(&ctx.psi, law, s.tolerances.continuity_step)?;
            checks.push(CheckResult::below(
                format!("continuity_{}", law.name()),
                r.relative,
                s.tolerances.continuity,
                "relative L2 residual",
            ));
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    let mut manifest = RunManifest {
        scenario: s.name.clone(),
        scenario_hash: loaded.hash(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: ctx.seed,
        started_unix,
        wall_clock_seconds: 0.0,
        checks,
        artifacts: out.written().to_vec(),
        passed,
    };
    manifest.artifacts.push("manifest.json".into());
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    out.write("manifest.json", &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(manifest)
}

fn write_trajectories(
    out: &mut Artifacts,
    law: VelocityLaw,
    records: &[TrajectoryRecord],
    n_coords: usize,
) -> Result<(), CliError> {
    for (i, r) in records.iter().enumerate() {
        out.write(&format!("trajectory_{}_{}.csv", law.name(), i + 1), &r.to_csv())?;
    }
    let data = format!("trajectories_{}.dat", law.name());
    out.write(&data, &trajectory_blocks(records))?;
    out.write(
        &format!("trajectories_{}.gp", law.name()),
        &trajectory_script(&data, n_coords, &format!("{} guidance", law.name())),
    )?;
    Ok(())
}

fn relative_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn check_points(ctx: &Context) -> Result<Vec<LabeledConfiguration>, CliError> {
    let s = &ctx.loaded.scenario;
    match &s.trajectories {
        Some(t) => Ok(t
            .starts
            .iter()
            .map(|x| LabeledConfiguration::new(s.dim, x.clone()))
            .collect::<Result<_, _>>()?),
        None => Ok(sample_branch(&ctx.psi, 100, ctx.seed, 2)?),
    }
}

fn reduction_check(ctx: &Context) -> Result<CheckResult, CliError> {
    let mut worst = 0.0f64;
    let points = check_points(ctx)?;
    for c in &points {
        let (q, _) = canonicalize(c)?;
        let a = symmetrized_velocity(&ctx.psi, &q)?;
        let b = standard_velocity(&ctx.psi, &q.representative())?;
        worst = worst.max(relative_gap(&a, &b));
    }
    Ok(CheckResult::below(
        "reduction",
        worst,
        ctx.loaded.scenario.tolerances.reduction,
        format!("symmetrized vs standard velocity at {} configurations", points.len()),
    ))
}

fn disjoint_check(ctx: &Context) -> Result<CheckResult, CliError> {
    let s = &ctx.loaded.scenario;
    let centers: Vec<f64> = s.state.packets.iter().flat_map(|p| p.center.clone()).collect();
    let (q, _) = canonicalize(&LabeledConfiguration::new(s.dim, centers)?)?;
    let a = symmetrized_velocity(&ctx.psi, &q)?;
    let b = standard_velocity(&ctx.psi, &q.representative())?;
    let rel = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| if *y == 0.0 { x.abs() } else { ((x - y) / y).abs() })
        .fold(0.0, f64::max);
    Ok(CheckResult::below(
        "disjoint_reduction",
        rel,
        s.tolerances.disjoint_reduction,
        "relative velocity difference at the packet centers",
    ))
}

fn strong_invariance_checks(ctx: &Context) -> Result<Vec<CheckResult>, CliError> {
    let s = &ctx.loaded.scenario;
    let n = ctx.psi.n_particles();
    let spec = s.trajectories.as_ref().expect("validated");
    let track = ctx.track()?;
    let options = ctx.loaded.integrator_options();
    let mut sigmas = Vec::new();
    if n >= 2 {
        sigmas.push(Permutation::transposition(n, 0, 1));
    }
    if n >= 3 {
        sigmas.push(Permutation::cycle(n, &(0..n).collect::<Vec<_>>())?);
    }
    let mut identity = 0.0f64;
    let mut standard = f64::INFINITY;
    for x in &spec.starts {
        let c = LabeledConfiguration::new(s.dim, x.clone())?;
        for sigma in &sigmas {
            identity = identity.max(strong_permutation_invariance_check(
                VelocityLaw::IdentityBased, track, &c, sigma, 0.0, &spec.times, &options,
            )?);
            standard = standard.min(strong_permutation_invariance_check(
                VelocityLaw::Standard, track, &c, sigma, 0.0, &spec.times, &options,
            )?);
        }
    }
    let mut out = vec![CheckResult::below(
        "strong_invariance_identity_based",
        identity,
        s.tolerances.agree_factor * ctx.tau,
        "relabeled start follows the relabeled trajectory",
    )];
    if !ctx.psi.species().all_masses_equal() && !sigmas.is_empty() {
        out.push(CheckResult::above(
            "strong_invariance_standard_breaks",
            standard,
            s.tolerances.differ_factor * ctx.tau,
            "unequal masses: relabeling changes the standard trajectory",
        ));
    }
    Ok(out)
}

fn comparison(ctx: &Context, a: VelocityLaw, b: VelocityLaw) -> Result<LawComparison, CliError> {
    let (spec, _, paired) = ctx.ensemble_spec(a)?;
    let track = ctx.track()?;
    Ok(compare_laws(&ctx.psi, (a, track), (b, track), &spec, paired)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutcome {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub ode_tolerance: f64,
    pub comparison: LawComparison,
    pub expectation: Option<Expectation>,
    pub expectation_met: Option<bool>,
    pub passed: bool,
}

/// Trajectory divergence and two-sample marginal statistics of two laws.
pub fn compare(
    loaded: &LoadedScenario,
    law_a: VelocityLaw,
    law_b: VelocityLaw,
    opts: &RunOptions,
) -> Result<CompareOutcome, CliError> {
    let ctx = Context::new(loaded, opts)?;
    opts.say(format!("comparing {} with {}", law_a.name(), law_b.name()));
    let result = comparison(&ctx, law_a, law_b)?;
    let t = &loaded.scenario.tolerances;
    let expectation = loaded.scenario.compare.expect;
    let expectation_met = expectation.map(|e| match e {
        Expectation::Differ => result.divergence > t.differ_factor * ctx.tau,
        Expectation::Agree => result.divergence < t.agree_factor * ctx.tau,
    });
    let outcome = CompareOutcome {
        scenario: loaded.scenario.name.clone(),
        scenario_hash: loaded.hash(),
        seed: ctx.seed,
        ode_tolerance: ctx.tau,
        passed: result.statistics_agree() && expectation_met.unwrap_or(true),
        comparison: result,
        expectation,
        expectation_met,
    };
    let mut out = Artifacts::new(opts.output_dir(loaded))?;
    out.write(
        &format!("compare_{}_{}.json", law_a.name(), law_b.name()),
        &serde_json::to_string_pretty(&outcome).expect("outcome serializes"),
    )?;
    Ok(outcome)
}
