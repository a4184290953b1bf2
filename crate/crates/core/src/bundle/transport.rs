use std::f64::consts::PI;

use num_complex::Complex64;

use super::fiber::FiberElement;
use super::symmetry::ExchangeGroup;
use crate::config_space::{canonicalize, LabeledConfiguration, Numbering, Permutation, Statistics, UnorderedConfiguration};
use crate::error::{Error, Result};

/// A discretized curve in unordered configuration space. `matchings[s]`
/// sends canonical point index p of sample s to the index of the same
/// moving point in sample s + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PathInNRd {
    configs: Vec<UnorderedConfiguration>,
    matchings: Vec<Permutation>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Greedy nearest-point bijection, accepted only if every matched distance is
/// below half the smaller minimum gap of the two samples.
fn match_points(a: &UnorderedConfiguration, b: &UnorderedConfiguration, step: usize) -> Result<Permutation> {
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for p in 0..n {
        for r in 0..n {
            pairs.push((distance(a.point(p), b.point(r)), p, r));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut image = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let limit = 0.5 * a.min_gap().min(b.min_gap());
    for (dist, p, r) in pairs {
        if image[p] != usize::MAX || taken[r] {
            continue;
        }
        if dist >= limit {
            return Err(Error::PathTooCoarse { step });
        }
        image[p] = r;
        taken[r] = true;
    }
    Permutation::from_images(image)
}

impl PathInNRd {
    pub fn new(configs: Vec<UnorderedConfiguration>) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::InvalidState("a path needs at least one sample".into()));
        }
        let (n, d) = (configs[0].len(), configs[0].dim());
        if configs.iter().any(|c| c.len() != n || c.dim() != d) {
            return Err(Error::PointSetMismatch);
        }
        let matchings = configs
            .windows(2)
            .enumerate()
            .map(|(s, w)| match_points(&w[0], &w[1], s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { configs, matchings })
    }

    /// Samples a labeled curve at `steps + 1` equally spaced parameters in [0, 1].
    pub fn from_curve(steps: usize, curve: impl Fn(f64) -> LabeledConfiguration) -> Result<Self> {
        let configs = (0..=steps)
            .map(|s| canonicalize(&curve(s as f64 / steps as f64)).map(|(q, _)| q))
            .collect::<Result<Vec<_>>>()?;
        Self::new(configs)
    }

    /// Constant path.
    pub fn constant(q: &UnorderedConfiguration, steps: usize) -> Result<Self> {
        Self::new(vec![q.clone(); steps + 1])
    }

    /// Points `a` and `b` of q (canonical indices) swap places along two
    /// half-circle arcs in the plane of the first two coordinates; needs d ≥ 2.
    pub fn exchange_loop(q: &UnorderedConfiguration, a: usize, b: usize, steps: usize) -> Result<Self> {
        if q.dim() < 2 {
            return Err(Error::InvalidState("exchange loops need at least two dimensions".into()));
        }
        let (pa, pb) = (q.point(a).to_vec(), q.point(b).to_vec());
        let mid: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| 0.5 * (x + y)).collect();
        Self::closed_curve(q, steps, |t| {
            let mut c: Vec<Vec<f64>> = q.points().map(<[f64]>::to_vec).collect();
            for (idx, from) in [(a, &pa), (b, &pb)] {
                c[idx] = rotate(from, &mid, PI * t);
            }
            c
        })
    }

    /// Rotates the points `cycle` about their centroid by `turn`·2π/len. For
    /// points on a regular polygon this realizes the cyclic permutation.
    pub fn rotation_loop(q: &UnorderedConfiguration, cycle: &[usize], turn: f64, steps: usize) -> Result<Self> {
        if q.dim() < 2 {
            return Err(Error::InvalidState("rotation loops need at least two dimensions".into()));
        }
        let d = q.dim();
        let mut centroid = vec![0.0; d];
        for &p in cycle {
            for (c, x) in centroid.iter_mut().zip(q.point(p)) {
                *c += x / cycle.len() as f64;
            }
        }
        let angle = 2.0 * PI * turn / cycle.len() as f64;
        Self::closed_curve(q, steps, |t| {
            let mut c: Vec<Vec<f64>> = q.points().map(<[f64]>::to_vec).collect();
            for &p in cycle {
                c[p] = rotate(q.point(p), &centroid, angle * t);
            }
            c
        })
    }

    /// Every point circles its own position with the given radius; contractible.
    pub fn wiggle_loop(q: &UnorderedConfiguration, radius: f64, steps: usize) -> Result<Self> {
        if q.dim() < 2 {
            return Err(Error::InvalidState("wiggle loops need at least two dimensions".into()));
        }
        Self::closed_curve(q, steps, |t| {
            q.points()
                .enumerate()
                .map(|(p, x)| {
                    let phase = 2.0 * PI * t + p as f64;
                    let mut y = x.to_vec();
                    y[0] += radius * (phase.cos() - (p as f64).cos());
                    y[1] += radius * (phase.sin() - (p as f64).sin());
                    y
                })
                .collect()
        })
    }

    /// Builds a loop from per-point positions and snaps the last sample onto
    /// the start so the loop closes exactly.
    fn closed_curve(q: &UnorderedConfiguration, steps: usize, points: impl Fn(f64) -> Vec<Vec<f64>>) -> Result<Self> {
        let mut configs = Vec::with_capacity(steps + 1);
        for s in 0..steps {
            configs.push(UnorderedConfiguration::from_points(&points(s as f64 / steps as f64))?);
        }
        configs[0] = q.clone();
        configs.push(q.clone());
        Self::new(configs)
    }

    pub fn configs(&self) -> &[UnorderedConfiguration] {
        &self.configs
    }

    pub fn start(&self) -> &UnorderedConfiguration {
        &self.configs[0]
    }

    pub fn end(&self) -> &UnorderedConfiguration {
        self.configs.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        self.start().coords() == self.end().coords()
    }

    /// Composite matching from the first to the last sample.
    pub fn endpoint_matching(&self) -> Permutation {
        let n = self.start().len();
        self.matchings
            .iter()
            .fold(Permutation::identity(n), |acc, m| m.compose(&acc).expect("equal sizes"))
    }

    /// This path followed by `other`, which must start where this one ends.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.end().coords() != other.start().coords() {
            return Err(Error::PathStartMismatch);
        }
        let mut configs = self.configs.clone();
        configs.extend(other.configs.iter().skip(1).cloned());
        let mut matchings = self.matchings.clone();
        matchings.extend(other.matchings.iter().cloned());
        Ok(Self { configs, matchings })
    }
}

fn rotate(x: &[f64], center: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    let mut y = x.to_vec();
    y[0] = center[0] + c * dx - s * dy;
    y[1] = center[1] + s * dx + c * dy;
    y
}

/// Carries each component along with its points: the component numbered ν₀
/// at the start becomes the one numbered ν₀∘M⁻¹ at the end, M the endpoint
/// matching. Values are untouched.
pub fn parallel_transport(e: &FiberElement, path: &PathInNRd) -> Result<FiberElement> {
    if path.start().coords() != e.base().coords() {
        return Err(Error::PathStartMismatch);
    }
    let m = path.endpoint_matching();
    let n = e.n_points();
    let mut components = vec![crate::wavefunction::Spinor::zeros(e.spin_dim()); e.components().len()];
    for (nu, s) in e.iter() {
        let moved = Numbering(nu.0.compose(&m.inverse())?);
        components[moved.rank()] = s.clone();
    }
    debug_assert_eq!(components.len(), crate::config_space::factorial(n));
    FiberElement::new(path.end().clone(), e.internal_dims().to_vec(), components)
}

/// ⟨e, e′⟩/⟨e, e⟩ for e′ the transport of e around a closed loop, after
/// checking that e′ is exactly proportional to e.
pub fn holonomy_scalar(e: &FiberElement, path: &PathInNRd) -> Result<Complex64> {
    if !path.is_closed() {
        return Err(Error::InvalidState("holonomy needs a closed loop".into()));
    }
    let moved = parallel_transport(e, path)?;
    let norm = e.norm_sqr();
    if norm == 0.0 {
        return Err(Error::InvalidState("zero fiber element".into()));
    }
    let s = e.inner(&moved) / norm;
    let residual = moved.sub(&e.scale(s)).norm() / norm.sqrt();
    if residual > 1e-10 {
        return Err(Error::NotInSubbundle { residual });
    }
    Ok(s)
}

/// Sign picked up by a fermion fiber element (k = 1) around a closed loop.
pub fn holonomy_sign_test(path: &PathInNRd, e: &FiberElement) -> Result<i32> {
    holonomy_sign(path, e, Statistics::Fermion)
}

/// As `holonomy_sign_test`, for a chosen subbundle.
pub fn holonomy_sign(path: &PathInNRd, e: &FiberElement, statistics: Statistics) -> Result<i32> {
    if e.internal_dims().iter().any(|&k| k != 1) {
        return Err(Error::UnequalInternalDims);
    }
    let residual = ExchangeGroup::full(e.n_points(), statistics)?.constraint_residual(e)?;
    if residual > 1e-10 {
        return Err(Error::NotInSubbundle { residual });
    }
    let s = holonomy_scalar(e, path)?;
    for sign in [1, -1] {
        if (s - Complex64::new(f64::from(sign), 0.0)).norm() <= 1e-10 {
            return Ok(sign);
        }
    }
    Err(Error::NotInSubbundle {
        residual: (s.norm() - 1.0).abs(),
    })
}
