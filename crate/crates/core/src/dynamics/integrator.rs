use serde::{Deserialize, Serialize};

use super::record::{StepFlags, TrajectoryRecord, TrajectoryStatus};
use super::track::PsiTrack;
use super::velocity::{standard_field, symmetrized_field, FieldValue, VelocityLaw};
use crate::config_space::{canonicalize, LabeledConfiguration, Permutation};
use crate::error::{Error, Result};

/// Default relative tolerance for analytic runs.
pub const ANALYTIC_TOLERANCE: f64 = 1e-8;
/// Default relative tolerance for grid runs.
pub const GRID_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    /// Local error bound per step, relative to max(1, |x|∞).
    pub tolerance: f64,
    /// Largest step; accepted steps are this divided by a power of two.
    pub initial_step: f64,
    /// Consecutive halvings tolerated before aborting near a node.
    pub max_halvings: u32,
    /// Node guard as a fraction of the running maximum density.
    pub node_factor: f64,
    /// Plain RK4 with constant step, no error control.
    pub fixed_step: bool,
    /// Multiplier on every velocity (1 except for negative controls).
    pub velocity_scale: f64,
    /// Re-sort points after each accepted step; `None` means "for the
    /// identity-based law only".
    pub canonicalize: Option<bool>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tolerance: ANALYTIC_TOLERANCE,
            initial_step: 0.05,
            max_halvings: 20,
            node_factor: 1e-12,
            fixed_step: false,
            velocity_scale: 1.0,
            canonicalize: None,
        }
    }
}

impl IntegratorOptions {
    pub fn for_track(track: &PsiTrack) -> Self {
        match track.box_length() {
            Some(_) => Self {
                tolerance: GRID_TOLERANCE,
                ..Self::default()
            },
            None => Self::default(),
        }
    }

    pub fn fixed(step: f64) -> Self {
        Self {
            fixed_step: true,
            initial_step: step,
            ..Self::default()
        }
    }
}

enum Attempt {
    Node,
    OutOfBox,
    Other(Error),
}

impl From<Error> for Attempt {
    fn from(e: Error) -> Self {
        match e {
            Error::Node { .. } => Attempt::Node,
            Error::OutOfBox { .. } => Attempt::OutOfBox,
            other => Attempt::Other(other),
        }
    }
}

pub struct Integrator<'a> {
    track: &'a PsiTrack,
    law: VelocityLaw,
    options: IntegratorOptions,
}

impl<'a> Integrator<'a> {
    pub fn new(track: &'a PsiTrack, law: VelocityLaw, options: IntegratorOptions) -> Self {
        Self { track, law, options }
    }

    pub fn options(&self) -> &IntegratorOptions {
        &self.options
    }

    fn canonicalizes(&self) -> bool {
        self.options
            .canonicalize
            .unwrap_or(self.law == VelocityLaw::IdentityBased)
    }

    /// Velocity field of the chosen law at time t.
    pub fn field(&self, t: f64, x: &[f64], floor: f64) -> Result<FieldValue> {
        if let Some(length) = self.track.box_length() {
            if let Some((a, &v)) = x.iter().enumerate().find(|(_, v)| !(0.0..length).contains(*v)) {
                return Err(Error::OutOfBox {
                    coordinate: a,
                    value: v,
                    length,
                });
            }
        }
        let frozen = self.track.frozen(t);
        let hbar = self.track.species().hbar();
        let masses = self.track.guidance_masses();
        let mut f = match self.law {
            VelocityLaw::Standard => standard_field(&frozen.jet(x)?, hbar, masses, floor)?,
            VelocityLaw::IdentityBased => {
                symmetrized_field(|y| frozen.jet(y), x, self.track.dim(), hbar, masses, floor)?
            }
        };
        if self.options.velocity_scale != 1.0 {
            for v in &mut f.velocity {
                *v *= self.options.velocity_scale;
            }
        }
        Ok(f)
    }

    /// One classical RK4 step; returns the new point and the largest density seen.
    fn rk4(&self, t: f64, x: &[f64], h: f64, floor: f64) -> std::result::Result<(Vec<f64>, f64), Attempt> {
        let shifted = |k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        let f1 = self.field(t, x, floor)?;
        let f2 = self.field(t + 0.5 * h, &shifted(&f1.velocity, 0.5 * h), floor)?;
        let f3 = self.field(t + 0.5 * h, &shifted(&f2.velocity, 0.5 * h), floor)?;
        let f4 = self.field(t + h, &shifted(&f3.velocity, h), floor)?;
        let out = (0..x.len())
            .map(|i| {
                x[i] + h / 6.0
                    * (f1.velocity[i] + 2.0 * f2.velocity[i] + 2.0 * f3.velocity[i] + f4.velocity[i])
            })
            .collect();
        let rho = f1.density.max(f2.density).max(f3.density).max(f4.density);
        Ok((out, rho))
    }

    fn sort_points(&self, x: &mut Vec<f64>) {
        let d = self.track.dim();
        if let Ok(c) = LabeledConfiguration::new(d, x.clone()) {
            if let Ok((q, _)) = canonicalize(&c) {
                *x = q.coords().to_vec();
            }
        }
    }

    /// Integrates from `start` at the track's initial time `t0`, recording at
    /// t0 and at each of `times` (increasing, all > t0).
    pub fn run(&self, start: &LabeledConfiguration, t0: f64, times: &[f64]) -> Result<TrajectoryRecord> {
        let n = self.track.n_particles();
        let d = self.track.dim();
        if start.len() != n || start.dim() != d {
            return Err(Error::SizeMismatch {
                expected: n * d,
                actual: start.len() * start.dim(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| !(t > t0)) {
            return Err(Error::InvalidState("observation times must increase from the start time".into()));
        }
        let mut x = start.coords().to_vec();
        if self.canonicalizes() {
            self.sort_points(&mut x);
        }
        let first = self.field(t0, &x, 0.0)?;
        let mut running_max = first.density;
        let mut record = TrajectoryRecord {
            law: self.law,
            dim: d,
            n_particles: n,
            times: vec![t0],
            states: vec![x.clone()],
            flags: vec![StepFlags::default()],
            status: TrajectoryStatus::Completed,
        };
        let mut t = t0;
        let mut h = self.options.initial_step;
        let mut flags = StepFlags::default();
        let mut consecutive = 0u32;
        for &target in times {
            while target - t > 1e-14 * target.abs().max(1.0) {
                let last = h >= target - t;
                let step = if last { target - t } else { h };
                let floor = self.options.node_factor * running_max;
                let outcome = if self.options.fixed_step {
                    self.rk4(t, &x, step, floor).map(|(y, rho)| (y, rho, 0.0, true))
                } else {
                    self.doubled(t, &x, step, floor)
                };
                match outcome {
                    Ok((y, rho, err, true)) => {
                        if !self.options.fixed_step && err < self.error_scale(&x) / 64.0 && step == h {
                            h = (2.0 * h).min(self.options.initial_step);
                        }
                        x = y;
                        t = if last { target } else { t + step };
                        running_max = running_max.max(rho);
                        flags.steps += 1;
                        consecutive = 0;
                        if self.canonicalizes() {
                            self.sort_points(&mut x);
                        }
                    }
                    Ok((_, _, _, false)) | Err(Attempt::Node) => {
                        if matches!(outcome, Err(Attempt::Node)) {
                            flags.node_rejections += 1;
                        }
                        if self.options.fixed_step && matches!(outcome, Err(Attempt::Node)) {
                            record.status = TrajectoryStatus::AbortedNearNode;
                            break;
                        }
                        h = step / 2.0;
                        flags.halvings += 1;
                        consecutive += 1;
                        if consecutive > self.options.max_halvings {
                            record.status = TrajectoryStatus::AbortedNearNode;
                            break;
                        }
                        continue;
                    }
                    Err(Attempt::OutOfBox) => {
                        record.status = TrajectoryStatus::AbortedOutOfBox;
                        break;
                    }
                    Err(Attempt::Other(e)) => return Err(e),
                }
            }
            if record.status != TrajectoryStatus::Completed {
                break;
            }
            record.times.push(target);
            record.states.push(x.clone());
            record.flags.push(std::mem::take(&mut flags));
        }
        if record.status != TrajectoryStatus::Completed && (flags != StepFlags::default()) {
            if let Some(last) = record.flags.last_mut() {
                last.steps += flags.steps;
                last.halvings += flags.halvings;
                last.node_rejections += flags.node_rejections;
            }
        }
        Ok(record)
    }

    fn error_scale(&self, x: &[f64]) -> f64 {
        self.options.tolerance * x.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// Step doubling: one step of size h against two of size h/2. Returns the
    /// Richardson-improved point, max density, error estimate, acceptance.
    fn doubled(
        &self,
        t: f64,
        x: &[f64],
        h: f64,
        floor: f64,
    ) -> std::result::Result<(Vec<f64>, f64, f64, bool), Attempt> {
        let (full, r0) = self.rk4(t, x, h, floor)?;
        let (mid, r1) = self.rk4(t, x, 0.5 * h, floor)?;
        let (half, r2) = self.rk4(t + 0.5 * h, &mid, 0.5 * h, floor)?;
        let err = full
            .iter()
            .zip(&half)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / 15.0;
        let ok = err <= self.error_scale(x);
        let improved = half
            .iter()
            .zip(&full)
            .map(|(b, a)| b + (b - a) / 15.0)
            .collect();
        Ok((improved, r0.max(r1).max(r2), err, ok))
    }
}

/// Integrates one trajectory under `law`; identity-based runs are re-sorted
/// into canonical order after every step.
pub fn integrate_trajectory(
    law: VelocityLaw,
    track: &PsiTrack,
    start: &LabeledConfiguration,
    t0: f64,
    times: &[f64],
    options: &IntegratorOptions,
) -> Result<TrajectoryRecord> {
    Integrator::new(track, law, options.clone()).run(start, t0, times)
}

/// Runs the labeled dynamics of `law` from c₀ and from σc₀ and returns the
/// largest coordinate deviation between σ·Q(t) and Q′(t) over recorded times.
pub fn strong_permutation_invariance_check(
    law: VelocityLaw,
    track: &PsiTrack,
    start: &LabeledConfiguration,
    sigma: &Permutation,
    t0: f64,
    times: &[f64],
    options: &IntegratorOptions,
) -> Result<f64> {
    let labeled = IntegratorOptions {
        canonicalize: Some(false),
        ..options.clone()
    };
    let a = integrate_trajectory(law, track, start, t0, times, &labeled)?;
    if sigma.is_identity() {
        return Ok(0.0);
    }
    let b = integrate_trajectory(law, track, &start.apply_permutation(sigma)?, t0, times, &labeled)?;
    if !a.is_completed() || !b.is_completed() {
        return Err(Error::InvalidState(format!(
            "trajectory did not complete ({} / {})",
            a.status.name(),
            b.status.name()
        )));
    }
    let mut worst = 0.0f64;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        let moved = LabeledConfiguration::new(a.dim, sa.clone())?.apply_permutation(sigma)?;
        for (p, q) in moved.coords().iter().zip(sb) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

/// Largest coordinate distance between two records at matching rows,
/// comparing canonical point sets.
pub fn trajectory_divergence(a: &TrajectoryRecord, b: &TrajectoryRecord) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        let (qa, _) = canonicalize(&LabeledConfiguration::new(a.dim, sa.clone())?)?;
        let (qb, _) = canonicalize(&LabeledConfiguration::new(b.dim, sb.clone())?)?;
        for (p, q) in qa.coords().iter().zip(qb.coords()) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}
