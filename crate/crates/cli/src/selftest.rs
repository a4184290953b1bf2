//! Reduced-scale invariant suite used as the CI entry point.

use idbm::bundle::{
    holonomy_sign, lift, phi_schrodinger_residual, phi_velocity, project_boson, project_fermion, restrict,
    transform_norm_check, ExchangeGroup, PathInNRd,
};
use idbm::config_space::{
    canonicalize, LabeledConfiguration, Permutation, Species, SpeciesTable, Statistics, UnorderedConfiguration,
};
use idbm::dynamics::{
    standard_velocity, strong_permutation_invariance_check, symmetrized_velocity, IntegratorOptions, PsiTrack,
    VelocityLaw, ANALYTIC_TOLERANCE,
};
use idbm::ensemble::{
    continuity_residual_scan, equivariance_report, marginal_identity_test, run_ensemble, stream_rng, EnsembleSpec,
};
use idbm::wavefunction::{GaussianPacket, GaussianState, Potential, WaveFunction};
use rand::Rng;

use crate::error::CliError;
use crate::run::CheckResult;

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub samples: usize,
    pub seed: u64,
    /// Multiplies every upper-bound tolerance; 0 must make the suite fail.
    pub tolerance_scale: f64,
    pub verbose: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 1,
            tolerance_scale: 1.0,
            verbose: false,
        }
    }
}

fn packets(d: usize, n: usize) -> Vec<GaussianPacket> {
    (0..n)
        .map(|i| {
            let f = i as f64;
            GaussianPacket::new(
                (0..d).map(|k| 0.6 * f - 0.2 * k as f64).collect(),
                0.9 + 0.1 * f,
                (0..d).map(|k| 0.5 - 0.3 * f + 0.1 * k as f64).collect(),
            )
        })
        .collect()
}

fn gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn electron_muon(separation: f64) -> Result<WaveFunction, idbm::Error> {
    WaveFunction::product(
        SpeciesTable::new(vec![Species::scalar(1.0, "e"), Species::scalar(206.8, "mu")], 1.0)?,
        1,
        vec![
            GaussianPacket::new(vec![0.0], 1.0, vec![1.0]),
            GaussianPacket::new(vec![separation], 1.0, vec![0.0]),
        ],
    )
}

fn random_configs(seed: u64, n: usize, d: usize, count: usize) -> Vec<UnorderedConfiguration> {
    let mut rng = stream_rng(seed, 3, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        if let Ok(q) = UnorderedConfiguration::from_points(&pts) {
            out.push(q);
        }
    }
    out
}

/// Runs every check; the caller decides the exit status from `passed`.
pub fn selftest(opts: &SelftestOptions) -> Result<Vec<CheckResult>, CliError> {
    let k = opts.tolerance_scale;
    let below = |name: &str, measured: f64, limit: f64, detail: String| CheckResult {
        name: name.into(),
        passed: measured < limit * k,
        measured,
        limit: limit * k,
        detail,
    };
    let above = |name: &str, measured: f64, limit: f64, detail: String| CheckResult {
        name: name.into(),
        passed: measured > limit,
        measured,
        limit,
        detail,
    };
    let exact = |name: &str, ok: bool, detail: String| CheckResult {
        name: name.into(),
        passed: ok,
        measured: if ok { 0.0 } else { 1.0 },
        limit: 0.0,
        detail,
    };
    let say = |m: &str| {
        if opts.verbose {
            eprintln!("selftest: {m}");
        }
    };
    let mut out = Vec::new();

    say("reduction identity");
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let species = SpeciesTable::uniform(n, 1.0)?;
        let state = GaussianState::symmetrized(&species, 2, packets(2, n), Statistics::Boson)?;
        let psi = WaveFunction::gaussian(species, state)?;
        for q in random_configs(opts.seed, n, 2, 50) {
            worst = worst.max(gap(&symmetrized_velocity(&psi, &q)?, &standard_velocity(&psi, &q.representative())?));
        }
    }
    out.push(below("reduction", worst, 1e-10, "symmetric state, equal masses".into()));

    say("disjoint supports");
    let far = electron_muon(20.0)?;
    let q = UnorderedConfiguration::from_points(&[vec![0.0], vec![20.0]])?;
    let a = symmetrized_velocity(&far, &q)?;
    let b = standard_velocity(&far, &q.representative())?;
    let rel = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| if *y == 0.0 { x.abs() } else { ((x - y) / y).abs() })
        .fold(0.0, f64::max);
    out.push(below("disjoint_reduction", rel, 1e-8, "electron-muon, 20 widths apart".into()));

    say("strong permutation invariance");
    let near = electron_muon(0.5)?;
    let track = PsiTrack::new(&near, 1.0, 0.0)?;
    let swap = Permutation::transposition(2, 0, 1);
    let times: Vec<f64> = (1..=4).map(|i| i as f64 * 0.25).collect();
    let start = LabeledConfiguration::new(1, vec![0.2, 0.9])?;
    let options = IntegratorOptions::default();
    let id = strong_permutation_invariance_check(VelocityLaw::IdentityBased, &track, &start, &swap, 0.0, &times, &options)?;
    let st = strong_permutation_invariance_check(VelocityLaw::Standard, &track, &start, &swap, 0.0, &times, &options)?;
    out.push(below("strong_invariance_identity_based", id, 10.0 * ANALYTIC_TOLERANCE, String::new()));
    out.push(above("strong_invariance_standard_breaks", st, 1e3 * ANALYTIC_TOLERANCE, String::new()));

    say("equivariance");
    let free = WaveFunction::product(
        SpeciesTable::with_masses(&[1.0, 2.0])?,
        1,
        vec![GaussianPacket::new(vec![-1.0], 1.0, vec![2.0]), GaussianPacket::new(vec![1.5], 0.8, vec![-0.5])],
    )?;
    let free_track = PsiTrack::new(&free, 2.0, 0.0)?;
    for law in [VelocityLaw::Standard, VelocityLaw::IdentityBased] {
        let spec = EnsembleSpec::new(opts.samples, opts.seed, law, vec![0.5, 1.0, 2.0]);
        let records = run_ensemble(&spec, &free, &free_track)?;
        let report = equivariance_report(&spec, &records, &free_track, 100 * opts.samples)?;
        let ratio = report.entries.iter().map(|e| e.max_ratio()).fold(0.0, f64::max);
        let aborted = report.entries.iter().map(|e| e.aborted_fraction).fold(0.0, f64::max);
        let mut c = below(&format!("equivariance_{}", law.name()), ratio, 1.0, format!("aborted {aborted:.4}"));
        c.passed &= aborted < 0.01;
        out.push(c);
    }

    say("fiber transform");
    let mixed = WaveFunction::product(SpeciesTable::with_masses(&[1.0, 1.7, 0.6])?, 2, packets(2, 3))?;
    let mut mismatches = 0;
    for q in random_configs(opts.seed ^ 1, 3, 2, 1000) {
        let c = q.representative();
        let shuffled = c.apply_permutation(&Permutation::cycle(3, &[0, 1, 2])?)?;
        let e = lift(&mixed, &canonicalize(&shuffled)?.0)?;
        if restrict(&e, &shuffled)? != mixed.evaluate(&shuffled)? {
            mismatches += 1;
        }
    }
    out.push(exact("restrict_lift", mismatches == 0, format!("{mismatches} mismatches in 1000")));
    let norms = transform_norm_check(&mixed, 10 * opts.samples, opts.seed)?;
    out.push(below(
        "norm_identity",
        norms.discrepancy,
        3.0 * norms.standard_error,
        format!("ratio {:.5}", norms.ratio),
    ));
    let mut worst = 0.0f64;
    for q in random_configs(opts.seed ^ 2, 3, 2, 200) {
        worst = worst.max(gap(&phi_velocity(&mixed, &q)?, &symmetrized_velocity(&mixed, &q)?));
    }
    out.push(below("fiber_velocity", worst, 1e-10, String::new()));

    say("holonomy and subbundles");
    let triangle = UnorderedConfiguration::from_points(
        &(0..3)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0 + 0.1;
                vec![a.cos(), a.sin()]
            })
            .collect::<Vec<_>>(),
    )?;
    let e = lift(&mixed, &triangle)?;
    let exchange = PathInNRd::exchange_loop(&triangle, 0, 1, 64)?;
    let cycle = PathInNRd::rotation_loop(&triangle, &[0, 1, 2], 1.0, 90)?;
    let f = project_fermion(&e)?;
    let b = project_boson(&e)?;
    let signs = [
        holonomy_sign(&exchange, &f, Statistics::Fermion)?,
        holonomy_sign(&cycle, &f, Statistics::Fermion)?,
        holonomy_sign(&exchange, &b, Statistics::Boson)?,
    ];
    out.push(exact("holonomy", signs == [-1, 1, 1], format!("signs {signs:?}")));
    let mut ranks_ok = true;
    for n in 1..=3 {
        for kd in 1..=2usize {
            for stats in [Statistics::Boson, Statistics::Fermion] {
                ranks_ok &= ExchangeGroup::full(n, stats)?.projector_rank(&vec![kd; n])? == kd.pow(n as u32);
            }
        }
    }
    let mixed_group = ExchangeGroup::by_tag(&["e", "e", "mu"], |t| {
        if t == "e" {
            Statistics::Fermion
        } else {
            Statistics::Boson
        }
    })?;
    ranks_ok &= mixed_group.projector_rank(&[1, 1, 1])? == 3;
    out.push(exact("subbundle_ranks", ranks_ok, String::new()));

    say("marginal identity");
    let spec = EnsembleSpec::new(opts.samples, opts.seed, VelocityLaw::Standard, vec![1.0]);
    let cmp = marginal_identity_test(&near, &track, &track, &spec, 20)?;
    let ratio = cmp.axes.iter().map(|a| a.statistic / a.threshold).fold(0.0, f64::max);
    out.push(below("marginal_identity", ratio, 1.0, String::new()));
    out.push(above("law_divergence", cmp.divergence, 1e3 * ANALYTIC_TOLERANCE, String::new()));

    say("grid residuals");
    let grid = WaveFunction::product(
        SpeciesTable::with_masses(&[1.0, 3.0])?,
        1,
        vec![GaussianPacket::new(vec![9.0], 1.0, vec![0.5]), GaussianPacket::new(vec![11.0], 1.2, vec![-0.3])],
    )?
    .to_grid(64, 20.0, Potential::harmonic(0.05, vec![10.0]))?;
    let h = grid.as_grid().ok_or(idbm::Error::GridRequired)?.spacing();
    let configs: Vec<UnorderedConfiguration> = [(28, 35), (30, 33), (26, 32)]
        .iter()
        .map(|&(a, b)| UnorderedConfiguration::from_points(&[vec![a as f64 * h], vec![b as f64 * h]]))
        .collect::<Result<_, _>>()?;
    let r1 = phi_schrodinger_residual(&grid, &configs, 1e-2, None)?;
    let r2 = phi_schrodinger_residual(&grid, &configs, 1e-3, None)?;
    let wrong = phi_schrodinger_residual(&grid, &configs, 1e-3, Some(&swap))?;
    out.push(above("fiber_schrodinger_order", (r1 / r2).log10(), 1.7, format!("{r1:.2e} -> {r2:.2e}")));
    out.push(above("fiber_schrodinger_wrong_mass", wrong / r2, 10.0, String::new()));
    for law in [VelocityLaw::Standard, VelocityLaw::IdentityBased] {
        let r = continuity_residual_scan(&grid, law, 1e-3)?;
        out.push(below(&format!("continuity_{}", law.name()), r.relative, 1e-3, String::new()));
    }
    Ok(out)
}
