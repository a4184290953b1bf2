//! |ψ|²-distributed ensembles: sampling, parallel propagation and the
//! statistical checks of equivariance and of the marginal identity between
//! the two guidance laws.

mod continuity;
mod sampling;
mod stats;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use continuity::{continuity_residual_field, continuity_residual_scan, ContinuityResidual};
pub use sampling::{sample_branch, sample_initial, stream_rng, with_workers, workers_from_env, WORKERS_ENV};
pub use stats::{
    ks_one_sample, ks_threshold, ks_two_sample, ks_two_sample_threshold, TabulatedCdf, KS_COEFFICIENT_1PCT,
};

use crate::config_space::{canonicalize, LabeledConfiguration};
use crate::dynamics::{
    integrate_trajectory, trajectory_divergence, IntegratorOptions, PsiTrack, TrajectoryRecord, TrajectoryStatus,
    VelocityLaw,
};
use crate::error::{Error, Result};
use crate::wavefunction::WaveFunction;

/// Fewest samples accepted by the statistical tests.
pub const MIN_SAMPLES: usize = 100;
/// Default size of the direct-sampling reference for unordered statistics.
pub const REFERENCE_SAMPLES: usize = 1_000_000;
/// Largest aborted fraction tolerated by the equivariance gate.
pub const MAX_ABORTED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub samples: usize,
    pub seed: u64,
    pub law: VelocityLaw,
    /// Observation times, increasing and after the initial time.
    pub times: Vec<f64>,
    #[serde(default)]
    pub options: IntegratorOptions,
    /// Thread count; `None` defers to the environment or the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl EnsembleSpec {
    pub fn new(samples: usize, seed: u64, law: VelocityLaw, times: Vec<f64>) -> Self {
        Self {
            samples,
            seed,
            law,
            times,
            options: IntegratorOptions::default(),
            workers: None,
        }
    }

    pub fn with_options(mut self, options: IntegratorOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_law(mut self, law: VelocityLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }
}

/// Integrates every start under `spec.law` in parallel. Output order follows
/// `starts`; node and box aborts become flagged records.
pub fn propagate_ensemble(
    spec: &EnsembleSpec,
    track: &PsiTrack,
    starts: &[LabeledConfiguration],
    t0: f64,
) -> Result<Vec<TrajectoryRecord>> {
    with_workers(spec.workers, || {
        starts
            .par_iter()
            .map(|c| match integrate_trajectory(spec.law, track, c, t0, &spec.times, &spec.options) {
                Ok(r) => Ok(r),
                Err(Error::Node { .. }) => Ok(stub(spec.law, c, t0, TrajectoryStatus::AbortedNearNode)),
                Err(Error::OutOfBox { .. }) => Ok(stub(spec.law, c, t0, TrajectoryStatus::AbortedOutOfBox)),
                Err(e) => Err(e),
            })
            .collect()
    })
}

fn stub(law: VelocityLaw, c: &LabeledConfiguration, t0: f64, status: TrajectoryStatus) -> TrajectoryRecord {
    TrajectoryRecord {
        law,
        dim: c.dim(),
        n_particles: c.len(),
        times: vec![t0],
        states: vec![c.coords().to_vec()],
        flags: vec![Default::default()],
        status,
    }
}

/// Samples ψ₀ on branch 0 of the seed and propagates the ensemble.
pub fn run_ensemble(spec: &EnsembleSpec, psi0: &WaveFunction, track: &PsiTrack) -> Result<Vec<TrajectoryRecord>> {
    let starts = with_workers(spec.workers, || sample_initial(psi0, spec.samples, spec.seed))?;
    propagate_ensemble(spec, track, &starts, psi0.time())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStatistic {
    pub label: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEntry {
    pub time: f64,
    pub samples: usize,
    pub aborted_fraction: f64,
    pub axes: Vec<AxisStatistic>,
}

impl TimeEntry {
    pub fn passed(&self) -> bool {
        self.aborted_fraction < MAX_ABORTED_FRACTION && self.axes.iter().all(|a| a.passed)
    }

    pub fn max_ratio(&self) -> f64 {
        self.axes.iter().map(|a| a.statistic / a.threshold).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub law: VelocityLaw,
    pub total_samples: usize,
    pub entries: Vec<TimeEntry>,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(TimeEntry::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn tsv_header() -> &'static str {
        "law\ttime\taxis\tstatistic\tthreshold\tpassed\tsamples\taborted_fraction"
    }

    /// One row per (time, axis).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::tsv_header());
        out.push('\n');
        for e in &self.entries {
            for a in &e.axes {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{:.6e}\t{:.6e}\t{}\t{}\t{:.6}",
                    self.law.name(),
                    e.time,
                    a.label,
                    a.statistic,
                    a.threshold,
                    a.passed,
                    e.samples,
                    e.aborted_fraction
                );
            }
        }
        out
    }
}

fn axis_label(p: usize, k: usize, canonical: bool) -> String {
    if canonical {
        format!("point{}_x{}", p + 1, k + 1)
    } else {
        format!("q{}_x{}", p + 1, k + 1)
    }
}

/// Rows of `records` at observation `row`, plus the overall aborted fraction.
fn rows_at(records: &[TrajectoryRecord], row: usize) -> (Vec<&[f64]>, f64) {
    let aborted = records.iter().filter(|r| !r.is_completed()).count();
    let rows = records
        .iter()
        .filter(|r| r.is_completed() && r.states.len() > row)
        .map(|r| r.states[row].as_slice())
        .collect();
    (rows, aborted as f64 / records.len().max(1) as f64)
}

fn canonical_coords(d: usize, x: &[f64]) -> Result<Vec<f64>> {
    Ok(canonicalize(&LabeledConfiguration::new(d, x.to_vec())?)?.0.coords().to_vec())
}

/// Marginal CDF of one labeled coordinate of |ψ|².
fn marginal_cdf(psi: &WaveFunction, particle: usize, axis: usize, hint: &[f64]) -> Result<TabulatedCdf> {
    if let Some(g) = psi.as_grid() {
        let table = g.marginal_table(particle, axis);
        let h = g.spacing();
        let centers: Vec<f64> = (0..table.len()).map(|j| j as f64 * h).collect();
        let masses: Vec<f64> = table.iter().map(|m| m * h).collect();
        return Ok(TabulatedCdf::from_cells(&centers, h, &masses));
    }
    let m = hint.len() as f64;
    let mean = hint.iter().sum::<f64>() / m;
    let sd = (hint.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt().max(1e-6);
    let lo = hint.iter().copied().fold(f64::INFINITY, f64::min) - 6.0 * sd;
    let hi = hint.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 6.0 * sd;
    psi.marginal_density(particle, axis, lo)?;
    Ok(TabulatedCdf::from_density(lo, hi, 20_001, |x| {
        psi.marginal_density(particle, axis, x).unwrap_or(0.0)
    }))
}

/// Compares the ensemble at observation `row` (time t) with |ψ_t|²: labeled
/// marginals against quadrature CDFs for the standard law, canonical-order
/// coordinates against `reference_samples` direct draws for the
/// identity-based law.
pub fn equivariance_test(
    records: &[TrajectoryRecord],
    reference: &WaveFunction,
    row: usize,
    law: VelocityLaw,
    reference_samples: usize,
    seed: u64,
) -> Result<TimeEntry> {
    let (rows, aborted_fraction) = rows_at(records, row);
    if rows.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: rows.len(),
            min: MIN_SAMPLES,
        });
    }
    let n = reference.n_particles();
    let d = reference.dim();
    let m = rows.len();
    let threshold = ks_threshold(m);
    let time = records
        .iter()
        .find(|r| r.times.len() > row)
        .map(|r| r.times[row])
        .unwrap_or(reference.time());
    let mut axes = Vec::with_capacity(n * d);
    match law {
        VelocityLaw::Standard => {
            for p in 0..n {
                for k in 0..d {
                    let xs: Vec<f64> = rows.iter().map(|x| x[p * d + k]).collect();
                    let cdf = marginal_cdf(reference, p, k, &xs)?;
                    let statistic = ks_one_sample(&xs, |x| cdf.eval(x));
                    axes.push(AxisStatistic {
                        label: axis_label(p, k, false),
                        statistic,
                        threshold,
                        passed: statistic < threshold,
                    });
                }
            }
        }
        VelocityLaw::IdentityBased => {
            let canon: Vec<Vec<f64>> = rows.iter().map(|x| canonical_coords(d, x)).collect::<Result<_>>()?;
            let refs: Vec<Vec<f64>> = sample_branch(reference, reference_samples, seed, 7)?
                .iter()
                .map(|c| canonical_coords(d, c.coords()))
                .collect::<Result<_>>()?;
            for p in 0..n {
                for k in 0..d {
                    let a: Vec<f64> = canon.iter().map(|x| x[p * d + k]).collect();
                    let b: Vec<f64> = refs.iter().map(|x| x[p * d + k]).collect();
                    let statistic = ks_two_sample(&a, &b);
                    axes.push(AxisStatistic {
                        label: axis_label(p, k, true),
                        statistic,
                        threshold,
                        passed: statistic < threshold,
                    });
                }
            }
        }
    }
    Ok(TimeEntry {
        time,
        samples: m,
        aborted_fraction,
        axes,
    })
}

/// Equivariance at every observation time of `spec`.
pub fn equivariance_report(
    spec: &EnsembleSpec,
    records: &[TrajectoryRecord],
    track: &PsiTrack,
    reference_samples: usize,
) -> Result<EquivarianceReport> {
    let entries = spec
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let psi_t = track.wavefunction_at(t)?;
            equivariance_test(records, &psi_t, i + 1, spec.law, reference_samples, spec.seed ^ (i as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivarianceReport {
        law: spec.law,
        total_samples: records.len(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawComparison {
    pub law_a: VelocityLaw,
    pub law_b: VelocityLaw,
    pub time: f64,
    pub samples: usize,
    pub axes: Vec<AxisStatistic>,
    /// Largest canonical-coordinate distance between the two laws along
    /// trajectories from identical starts.
    pub divergence: f64,
    pub paired_trajectories: usize,
    pub aborted_fraction: [f64; 2],
}

impl LawComparison {
    pub fn statistics_agree(&self) -> bool {
        self.axes.iter().all(|a| a.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Propagates |ψ₀|² ensembles under two laws on independent seed branches,
/// canonicalizes the endpoints and compares canonical coordinates with the
/// two-sample KS test at the last observation time. The first `paired`
/// starts of side A are also run under law B to measure how far individual
/// trajectories drift apart.
pub fn compare_laws(
    psi0: &WaveFunction,
    a: (VelocityLaw, &PsiTrack),
    b: (VelocityLaw, &PsiTrack),
    spec: &EnsembleSpec,
    paired: usize,
) -> Result<LawComparison> {
    if spec.samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: spec.samples,
            min: MIN_SAMPLES,
        });
    }
    let d = psi0.dim();
    let n = psi0.n_particles();
    let t0 = psi0.time();
    let spec_a = spec.clone().with_law(a.0);
    let spec_b = spec.clone().with_law(b.0);
    let starts_a = with_workers(spec.workers, || sample_branch(psi0, spec.samples, spec.seed, 0))?;
    let starts_b = with_workers(spec.workers, || sample_branch(psi0, spec.samples, spec.seed, 1))?;
    let records_a = propagate_ensemble(&spec_a, a.1, &starts_a, t0)?;
    let records_b = propagate_ensemble(&spec_b, b.1, &starts_b, t0)?;
    let row = spec.times.len();
    let (rows_a, aborted_a) = rows_at(&records_a, row);
    let (rows_b, aborted_b) = rows_at(&records_b, row);
    let canon = |rows: &[&[f64]]| -> Result<Vec<Vec<f64>>> { rows.iter().map(|x| canonical_coords(d, x)).collect() };
    let ca = canon(&rows_a)?;
    let cb = canon(&rows_b)?;
    let threshold = ks_two_sample_threshold(ca.len(), cb.len());
    let mut axes = Vec::new();
    for p in 0..n {
        for k in 0..d {
            let xa: Vec<f64> = ca.iter().map(|x| x[p * d + k]).collect();
            let xb: Vec<f64> = cb.iter().map(|x| x[p * d + k]).collect();
            let statistic = ks_two_sample(&xa, &xb);
            axes.push(AxisStatistic {
                label: axis_label(p, k, true),
                statistic,
                threshold,
                passed: statistic < threshold,
            });
        }
    }
    let pairs = paired.min(starts_a.len());
    let mirrored = propagate_ensemble(&spec_b, b.1, &starts_a[..pairs], t0)?;
    let mut divergence = 0.0f64;
    for (x, y) in records_a.iter().zip(&mirrored) {
        if x.is_completed() && y.is_completed() {
            divergence = divergence.max(trajectory_divergence(x, y)?);
        }
    }
    Ok(LawComparison {
        law_a: a.0,
        law_b: b.0,
        time: spec.times.last().copied().unwrap_or(t0),
        samples: spec.samples,
        axes,
        divergence,
        paired_trajectories: pairs,
        aborted_fraction: [aborted_a, aborted_b],
    })
}

/// Standard against identity-based: same statistics, different trajectories.
pub fn marginal_identity_test(
    psi0: &WaveFunction,
    standard_track: &PsiTrack,
    identity_track: &PsiTrack,
    spec: &EnsembleSpec,
    paired: usize,
) -> Result<LawComparison> {
    compare_laws(
        psi0,
        (VelocityLaw::Standard, standard_track),
        (VelocityLaw::IdentityBased, identity_track),
        spec,
        paired,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::SpeciesTable;
    use crate::wavefunction::{GaussianPacket, Potential};

    fn free_pair() -> WaveFunction {
        let species = SpeciesTable::with_masses(&[1.0, 2.0]).unwrap();
        WaveFunction::product(
            species,
            1,
            vec![GaussianPacket::new(vec![-1.0], 1.0, vec![2.0]), GaussianPacket::new(vec![1.5], 0.8, vec![-0.5])],
        )
        .unwrap()
    }

    fn grid_pair() -> WaveFunction {
        let species = SpeciesTable::with_masses(&[1.0, 3.0]).unwrap();
        WaveFunction::product(
            species,
            1,
            vec![GaussianPacket::new(vec![9.0], 1.0, vec![0.5]), GaussianPacket::new(vec![11.0], 1.2, vec![-0.3])],
        )
        .unwrap()
        .to_grid(64, 20.0, Potential::harmonic(0.05, vec![10.0]))
        .unwrap()
    }

    fn moments(xs: &[f64]) -> (f64, f64) {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m)
    }

    fn quadrature_moments(psi: &WaveFunction, particle: usize) -> (f64, f64) {
        let (lo, hi, n) = (-20.0, 20.0, 40_001);
        let h = (hi - lo) / (n - 1) as f64;
        let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = lo + h * i as f64;
            let p = psi.marginal_density(particle, 0, x).unwrap();
            z += p;
            s1 += p * x;
            s2 += p * x * x;
        }
        let mean = s1 / z;
        (mean, s2 / z - mean * mean)
    }

    #[test]
    fn sample_moments_match_density() {
        let psi = free_pair();
        let m = 20_000;
        let draws = sample_initial(&psi, m, 11).unwrap();
        for p in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|c| c.coords()[p]).collect();
            let (mean, var) = moments(&xs);
            let (mu, v) = quadrature_moments(&psi, p);
            assert!((mean - mu).abs() < 4.0 * (v / m as f64).sqrt(), "particle {p}: {mean} vs {mu}");
            assert!((var / v - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn grid_draws_stay_on_the_support() {
        let psi = grid_pair();
        let draws = sample_initial(&psi, 2000, 3).unwrap();
        let xs: Vec<f64> = draws.iter().map(|c| c.coords()[0]).collect();
        let (mean, var) = moments(&xs);
        let table = psi.as_grid().unwrap().marginal_table(0, 0);
        let h = psi.as_grid().unwrap().spacing();
        let mu: f64 = table.iter().enumerate().map(|(j, p)| j as f64 * h * p * h).sum();
        let v: f64 = table.iter().enumerate().map(|(j, p)| (j as f64 * h - mu).powi(2) * p * h).sum::<f64>() + h * h / 12.0;
        assert!((mean - mu).abs() < 4.0 * (v / 2000.0).sqrt(), "{mean} vs {mu}");
        assert!((var / v - 1.0).abs() < 0.15, "{var} vs {v}");
    }

    #[test]
    fn sampling_is_deterministic_and_worker_independent() {
        let psi = free_pair();
        let a = with_workers(Some(1), || sample_initial(&psi, 500, 5).unwrap());
        let b = with_workers(Some(3), || sample_initial(&psi, 500, 5).unwrap());
        assert_eq!(a, b);
        let c = sample_initial(&psi, 500, 6).unwrap();
        assert_ne!(a, c);
        let prefix = sample_initial(&psi, 10, 5).unwrap();
        assert_eq!(&a[..10], &prefix[..]);
        let other = sample_branch(&psi, 10, 5, 1).unwrap();
        assert_ne!(prefix, other);
    }

    #[test]
    fn single_member_ensemble_runs() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let spec = EnsembleSpec::new(1, 2, VelocityLaw::IdentityBased, vec![0.5, 1.0]);
        let records = run_ensemble(&spec, &psi, &track).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn propagation_is_worker_independent() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let spec = EnsembleSpec::new(16, 9, VelocityLaw::Standard, vec![1.0]);
        let a = run_ensemble(&spec.clone().with_workers(Some(1)), &psi, &track).unwrap();
        let b = run_ensemble(&spec.with_workers(Some(4)), &psi, &track).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn free_ensemble_spreads_like_the_packet() {
        let psi = free_pair();
        let t = 1.5;
        let track = PsiTrack::new(&psi, t, 0.0).unwrap();
        let spec = EnsembleSpec::new(4000, 21, VelocityLaw::Standard, vec![t]);
        let records = run_ensemble(&spec, &psi, &track).unwrap();
        let psi_t = psi.at(t).unwrap();
        for p in 0..2 {
            let xs: Vec<f64> = records.iter().map(|r| r.last_state().unwrap()[p]).collect();
            let (mean, var) = moments(&xs);
            let (mu, v) = quadrature_moments(&psi_t, p);
            assert!((mean - mu).abs() < 4.0 * (v / 4000.0).sqrt());
            assert!((var / v - 1.0).abs() < 0.1, "{var} vs {v}");
        }
    }

    #[test]
    fn equivariance_holds_for_both_laws_and_fails_when_perturbed() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 2.0, 0.0).unwrap();
        for law in [VelocityLaw::Standard, VelocityLaw::IdentityBased] {
            let spec = EnsembleSpec::new(2000, 4, law, vec![1.0, 2.0]);
            let records = run_ensemble(&spec, &psi, &track).unwrap();
            let at_start = equivariance_test(&records, &psi, 0, law, 100_000, 1).unwrap();
            assert!(at_start.passed(), "{at_start:?}");
            let report = equivariance_report(&spec, &records, &track, 100_000).unwrap();
            assert!(report.passed(), "{}", report.to_tsv());
            assert_eq!(report.to_tsv().lines().count(), 1 + 2 * 2);
        }
        let mut options = IntegratorOptions::default();
        options.velocity_scale = 1.1;
        let spec = EnsembleSpec::new(2000, 4, VelocityLaw::Standard, vec![2.0]).with_options(options);
        let records = run_ensemble(&spec, &psi, &track).unwrap();
        let report = equivariance_report(&spec, &records, &track, 100_000).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn too_few_samples_are_refused() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let spec = EnsembleSpec::new(10, 4, VelocityLaw::Standard, vec![1.0]);
        let records = run_ensemble(&spec, &psi, &track).unwrap();
        assert!(matches!(
            equivariance_report(&spec, &records, &track, 1000),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn laws_share_unordered_statistics_but_not_trajectories() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 1.5, 0.0).unwrap();
        let spec = EnsembleSpec::new(1500, 8, VelocityLaw::Standard, vec![1.5]);
        let report = marginal_identity_test(&psi, &track, &track, &spec, 20).unwrap();
        assert!(report.statistics_agree(), "{}", report.to_json());
        assert!(report.divergence > 1e-3);
        let same = compare_laws(
            &psi,
            (VelocityLaw::Standard, &track),
            (VelocityLaw::Standard, &track),
            &spec,
            5,
        )
        .unwrap();
        assert_eq!(same.divergence, 0.0);
        assert!(same.statistics_agree());
    }

    #[test]
    fn wrong_guidance_masses_are_detected() {
        let psi = free_pair();
        let track = PsiTrack::new(&psi, 2.0, 0.0).unwrap();
        let wrong = track.clone().with_guidance_masses(&[2.0, 1.0]).unwrap();
        let spec = EnsembleSpec::new(1500, 8, VelocityLaw::Standard, vec![2.0]);
        let report = marginal_identity_test(&psi, &wrong, &track, &spec, 0).unwrap();
        assert!(!report.statistics_agree(), "{}", report.to_json());
    }

    #[test]
    fn continuity_holds_for_both_laws() {
        let psi = grid_pair();
        for law in [VelocityLaw::Standard, VelocityLaw::IdentityBased] {
            let r = continuity_residual_scan(&psi, law, 1e-3).unwrap();
            assert!(r.relative < 1e-3, "{law:?}: {r:?}");
        }
    }

    #[test]
    fn symmetrized_density_is_the_permutation_sum() {
        let psi = grid_pair();
        let (mid, _, rho) = continuity_residual_field(&psi, VelocityLaw::IdentityBased, 1e-3).unwrap();
        let base = mid.density_field();
        let n = mid.points_per_axis();
        for (i, j) in [(10usize, 40usize), (31, 33), (5, 60)] {
            let a = i * n + j;
            let b = j * n + i;
            assert!((rho[a] - (base[a] + base[b])).abs() < 1e-14);
            assert!((rho[a] - rho[b]).abs() < 1e-14);
        }
        assert_eq!(rho.len(), n * n);
    }
}
