//! Analytic backend: finite superpositions of Gaussian product states under
//! free evolution, propagated in closed form.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::spinor::{LocalJet, Spinor};
use crate::config_space::{permutations, SpeciesTable, Statistics};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn default_spinor() -> Vec<Complex64> {
    vec![c(1.0)]
}

/// A single-particle packet (2πσ₀²)^(−d/4) exp(−|x−x₀|²/4σ₀² + ik·(x−x₀)) ⊗ χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: Vec<f64>,
    pub width: f64,
    pub wave_vector: Vec<f64>,
    #[serde(default = "default_spinor")]
    pub spinor: Vec<Complex64>,
}

impl GaussianPacket {
    pub fn new(center: Vec<f64>, width: f64, wave_vector: Vec<f64>) -> Self {
        Self {
            center,
            width,
            wave_vector,
            spinor: default_spinor(),
        }
    }

    pub fn at_rest(center: Vec<f64>, width: f64) -> Self {
        let d = center.len();
        Self::new(center, width, vec![0.0; d])
    }

    pub fn with_spinor(mut self, spinor: Vec<Complex64>) -> Self {
        self.spinor = spinor;
        self
    }
}

/// One product term c·Π_i g_i(x_i) ⊗ χ_i of a superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub coefficient: Complex64,
    pub packets: Vec<GaussianPacket>,
}

impl ProductTerm {
    pub fn new(coefficient: Complex64, packets: Vec<GaussianPacket>) -> Self {
        Self {
            coefficient,
            packets,
        }
    }
}

/// exp(−a|x|² + b·x + c) on ℝ^d.
#[derive(Debug, Clone)]
pub(crate) struct ComplexGaussian {
    a: Complex64,
    b: Vec<Complex64>,
    c: Complex64,
}

impl ComplexGaussian {
    fn from_packet(p: &GaussianPacket) -> Self {
        let d = p.center.len() as f64;
        let a = 1.0 / (4.0 * p.width * p.width);
        let b = p
            .center
            .iter()
            .zip(&p.wave_vector)
            .map(|(&x0, &k)| Complex64::new(2.0 * a * x0, k))
            .collect();
        let r2: f64 = p.center.iter().map(|x| x * x).sum();
        let kx: f64 = p.center.iter().zip(&p.wave_vector).map(|(x, k)| x * k).sum();
        let log_norm = -(d / 4.0) * (2.0 * PI * p.width * p.width).ln();
        Self {
            a: c(a),
            b,
            c: Complex64::new(-a * r2 + log_norm, -kx),
        }
    }

    /// Free propagation by time t: a/D, b/D and the matching shift in c,
    /// with D = 1 + 2iħat/m.
    fn evolved(&self, t: f64, hbar: f64, mass: f64) -> Self {
        if t == 0.0 {
            return self.clone();
        }
        let d = self.b.len() as f64;
        let denom = c(1.0) + 2.0 * I * hbar * self.a * t / mass;
        let bb: Complex64 = self.b.iter().map(|b| b * b).sum();
        Self {
            a: self.a / denom,
            b: self.b.iter().map(|b| b / denom).collect(),
            c: self.c + I * hbar * bb * t / (2.0 * mass * denom) - 0.5 * d * denom.ln(),
        }
    }

    #[inline]
    fn value(&self, x: &[f64]) -> Complex64 {
        let mut e = self.c;
        for (xk, bk) in x.iter().zip(&self.b) {
            e += bk * xk - self.a * (xk * xk);
        }
        e.exp()
    }

    /// ∫ conj(self)·other over ℝ^d.
    fn overlap(&self, other: &Self) -> Complex64 {
        let d = self.b.len() as f64;
        let a = self.a.conj() + other.a;
        let bb: Complex64 = self
            .b
            .iter()
            .zip(&other.b)
            .map(|(x, y)| {
                let s = x.conj() + y;
                s * s
            })
            .sum();
        (c(PI) / a).powf(0.5 * d) * (bb / (4.0 * a) + self.c.conj() + other.c).exp()
    }

    /// Mean of the normalized |g|² density.
    fn density_mean(&self) -> Vec<f64> {
        self.b.iter().map(|b| b.re / (2.0 * self.a.re)).collect()
    }

    /// Per-axis standard deviation of the normalized |g|² density.
    fn density_std(&self) -> f64 {
        0.5 / self.a.re.sqrt()
    }

    /// ∫ conj(self)·other over all axes of ℝ^d except `axis`, evaluated at
    /// x_axis = x.
    fn partial_overlap(&self, other: &Self, axis: usize, x: f64) -> Complex64 {
        let a = self.a.conj() + other.a;
        let mut e = self.c.conj() + other.c;
        let mut pre = c(1.0);
        for (k, (p, q)) in self.b.iter().zip(&other.b).enumerate() {
            let s = p.conj() + q;
            if k == axis {
                e += s * x - a * (x * x);
            } else {
                pre *= (c(PI) / a).sqrt();
                e += s * s / (4.0 * a);
            }
        }
        pre * e.exp()
    }
}

#[derive(Debug, Clone)]
struct Term {
    coefficient: Complex64,
    factors: Vec<ComplexGaussian>,
    factor_spinors: Vec<Spinor>,
    spinor: Spinor,
}

/// Normalized superposition Σ_a c_a Π_i g_{a,i}(x_i) ⊗ χ_{a,i}, freely evolving.
#[derive(Debug, Clone)]
pub struct GaussianState {
    dim: usize,
    hbar: f64,
    masses: Vec<f64>,
    initial: Arc<Vec<Term>>,
    current: Arc<Vec<Term>>,
    time: f64,
}

impl GaussianState {
    pub fn new(species: &SpeciesTable, dim: usize, terms: &[ProductTerm]) -> Result<Self> {
        let mut state = Self::unnormalized(species, dim, terms)?;
        let norm = state.norm();
        if !(norm > 1e-300 && norm.is_finite()) {
            return Err(Error::InvalidState(format!("state has norm {norm}")));
        }
        let terms: Vec<Term> = state
            .initial
            .iter()
            .map(|t| Term {
                coefficient: t.coefficient / norm,
                ..t.clone()
            })
            .collect();
        state.initial = Arc::new(terms);
        state.current = state.initial.clone();
        Ok(state)
    }

    fn unnormalized(species: &SpeciesTable, dim: usize, terms: &[ProductTerm]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidState("no product terms".into()));
        }
        let n = species.len();
        let mut built = Vec::with_capacity(terms.len());
        for (ti, t) in terms.iter().enumerate() {
            if t.packets.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    actual: t.packets.len(),
                });
            }
            let mut factors = Vec::with_capacity(n);
            let mut factor_spinors = Vec::with_capacity(n);
            for (i, p) in t.packets.iter().enumerate() {
                if p.center.len() != dim || p.wave_vector.len() != dim {
                    return Err(Error::InvalidState(format!(
                        "term {ti} packet {i}: expected {dim}-dimensional center and wave vector"
                    )));
                }
                if !(p.width > 0.0 && p.width.is_finite()) {
                    return Err(Error::InvalidState(format!(
                        "term {ti} packet {i}: width must be positive"
                    )));
                }
                if p.spinor.len() != species.internal_dim(i) {
                    return Err(Error::InvalidState(format!(
                        "term {ti} packet {i}: spinor has {} components, species expects {}",
                        p.spinor.len(),
                        species.internal_dim(i)
                    )));
                }
                factors.push(ComplexGaussian::from_packet(p));
                factor_spinors.push(Spinor(p.spinor.clone()));
            }
            let spinor = factor_spinors
                .iter()
                .skip(1)
                .fold(factor_spinors[0].clone(), |acc, s| acc.tensor(s));
            built.push(Term {
                coefficient: t.coefficient,
                factors,
                factor_spinors,
                spinor,
            });
        }
        let initial = Arc::new(built);
        Ok(Self {
            dim,
            hbar: species.hbar(),
            masses: species.masses(),
            current: initial.clone(),
            initial,
            time: 0.0,
        })
    }

    /// A single product Π_i g_i(x_i) ⊗ χ_i.
    pub fn product(
        species: &SpeciesTable,
        dim: usize,
        packets: Vec<GaussianPacket>,
    ) -> Result<Self> {
        Self::new(species, dim, &[ProductTerm::new(c(1.0), packets)])
    }

    /// Σ_σ (±1)^σ Π_i f_{σ(i)}(x_i): the (anti)symmetrization of a product,
    /// permuting spinor factors along with the packets.
    pub fn symmetrized(
        species: &SpeciesTable,
        dim: usize,
        packets: Vec<GaussianPacket>,
        statistics: Statistics,
    ) -> Result<Self> {
        let terms: Vec<ProductTerm> = permutations(packets.len())?
            .map(|s| {
                let permuted = (0..packets.len())
                    .map(|i| packets[s.image(i)].clone())
                    .collect();
                ProductTerm::new(c(statistics.character(&s)), permuted)
            })
            .collect();
        Self::new(species, dim, &terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn n_terms(&self) -> usize {
        self.initial.len()
    }

    /// Same state advanced to absolute time `t` (exact free propagation).
    pub fn at_time(&self, t: f64) -> Self {
        let current = self
            .initial
            .iter()
            .map(|term| Term {
                factors: term
                    .factors
                    .iter()
                    .zip(&self.masses)
                    .map(|(g, &m)| g.evolved(t, self.hbar, m))
                    .collect(),
                ..term.clone()
            })
            .collect();
        Self {
            current: Arc::new(current),
            time: t,
            ..self.clone()
        }
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        let scale = |terms: &Arc<Vec<Term>>| {
            Arc::new(
                terms
                    .iter()
                    .map(|t| Term {
                        coefficient: t.coefficient * z,
                        ..t.clone()
                    })
                    .collect::<Vec<_>>(),
            )
        };
        Self {
            initial: scale(&self.initial),
            current: scale(&self.current),
            ..self.clone()
        }
    }

    pub fn spin_dim(&self) -> usize {
        self.current[0].spinor.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Spinor {
        let mut out = Spinor::zeros(self.spin_dim());
        for term in self.current.iter() {
            let mut prod = term.coefficient;
            for (i, g) in term.factors.iter().enumerate() {
                prod *= g.value(&x[i * self.dim..(i + 1) * self.dim]);
            }
            out.add_scaled(prod, &term.spinor);
        }
        out
    }

    /// Value and all N·d first derivatives; each factor contributes
    /// ∂_k g = (−2a x_k + b_k) g.
    pub fn jet(&self, x: &[f64]) -> LocalJet {
        let d = self.dim;
        let n = self.n_particles();
        let w = self.spin_dim();
        let mut value = Spinor::zeros(w);
        let mut gradients = vec![Spinor::zeros(w); n * d];
        for term in self.current.iter() {
            let mut prod = term.coefficient;
            for (i, g) in term.factors.iter().enumerate() {
                prod *= g.value(&x[i * d..(i + 1) * d]);
            }
            value.add_scaled(prod, &term.spinor);
            for (i, g) in term.factors.iter().enumerate() {
                for k in 0..d {
                    let factor = g.b[k] - 2.0 * g.a * x[i * d + k];
                    gradients[i * d + k].add_scaled(prod * factor, &term.spinor);
                }
            }
        }
        LocalJet {
            value,
            gradients,
            dim: d,
        }
    }

    /// ∇_i·∇_i ψ, using ∂²_k g = ((b_k − 2a x_k)² − 2a) g per factor.
    pub fn laplacian(&self, x: &[f64], particle: usize) -> Spinor {
        let d = self.dim;
        let mut out = Spinor::zeros(self.spin_dim());
        for term in self.current.iter() {
            let mut prod = term.coefficient;
            for (i, g) in term.factors.iter().enumerate() {
                prod *= g.value(&x[i * d..(i + 1) * d]);
            }
            let g = &term.factors[particle];
            let mut lap = Complex64::new(0.0, 0.0);
            for k in 0..d {
                let f = g.b[k] - 2.0 * g.a * x[particle * d + k];
                lap += f * f - 2.0 * g.a;
            }
            out.add_scaled(prod * lap, &term.spinor);
        }
        out
    }

    /// Exact squared L² norm from closed-form Gaussian overlaps.
    pub fn norm_sqr(&self) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for ta in self.current.iter() {
            for tb in self.current.iter() {
                let mut z = ta.coefficient.conj() * tb.coefficient;
                for i in 0..self.n_particles() {
                    z *= ta.factors[i].overlap(&tb.factors[i]);
                    z *= ta.factor_spinors[i].inner(&tb.factor_spinors[i]);
                }
                total += z;
            }
        }
        total.re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    /// Marginal of |ψ|² on coordinate `axis` of particle `particle`, at x.
    pub fn marginal_density(&self, particle: usize, axis: usize, x: f64) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for ta in self.current.iter() {
            for tb in self.current.iter() {
                let mut z = ta.coefficient.conj() * tb.coefficient;
                for i in 0..self.n_particles() {
                    z *= ta.factor_spinors[i].inner(&tb.factor_spinors[i]);
                    z *= if i == particle {
                        ta.factors[i].partial_overlap(&tb.factors[i], axis, x)
                    } else {
                        ta.factors[i].overlap(&tb.factors[i])
                    };
                }
                total += z;
            }
        }
        total.re.max(0.0)
    }

    /// Means and standard deviations of the per-term |factor|² densities;
    /// used to size quadrature windows and proposals.
    pub fn packet_extents(&self) -> Vec<(Vec<f64>, f64)> {
        self.current
            .iter()
            .flat_map(|t| t.factors.iter().map(|g| (g.density_mean(), g.density_std())))
            .collect()
    }

    /// One exact draw from |ψ|²/‖ψ‖² by rejection from the Gaussian mixture
    /// Σ_a |u_a|²/λ_a, which dominates |ψ|² by Cauchy–Schwarz.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n_particles();
        let d = self.dim;
        // λ_a = ‖u_a‖, u_a = |c_a| Π_i |g_ai| ‖χ_ai‖
        let lambdas: Vec<f64> = self
            .current
            .iter()
            .map(|t| {
                let mut v = t.coefficient.norm_sqr();
                for i in 0..n {
                    v *= t.factors[i].overlap(&t.factors[i]).re * t.factor_spinors[i].norm_sqr();
                }
                v.sqrt()
            })
            .collect();
        let lambda_total: f64 = lambdas.iter().sum();
        let single = self.current.len() == 1;
        let mut x = vec![0.0; n * d];
        loop {
            let mut u = rng.random::<f64>() * lambda_total;
            let mut pick = lambdas.len() - 1;
            for (a, &l) in lambdas.iter().enumerate() {
                if u < l {
                    pick = a;
                    break;
                }
                u -= l;
            }
            let term = &self.current[pick];
            for (i, g) in term.factors.iter().enumerate() {
                let mean = g.density_mean();
                let std = g.density_std();
                for k in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    x[i * d + k] = mean[k] + std * z;
                }
            }
            if single {
                return x;
            }
            let target = self.evaluate(&x).norm_sqr();
            let envelope: f64 = lambda_total
                * self
                    .current
                    .iter()
                    .zip(&lambdas)
                    .filter(|(_, &l)| l > 0.0)
                    .map(|(t, &l)| {
                        let mut u2 = t.coefficient.norm_sqr();
                        for i in 0..n {
                            u2 *= t.factors[i].value(&x[i * d..(i + 1) * d]).norm_sqr()
                                * t.factor_spinors[i].norm_sqr();
                        }
                        u2 / l
                    })
                    .sum::<f64>();
            if envelope > 0.0 && rng.random::<f64>() * envelope <= target {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one(m: f64) -> SpeciesTable {
        SpeciesTable::with_masses(&[m]).unwrap()
    }

    /// Free-Gaussian width σ_t = σ₀√(1 + (ħt/2mσ₀²)²).
    fn sigma_t(s0: f64, t: f64, m: f64) -> f64 {
        s0 * (1.0 + (t / (2.0 * m * s0 * s0)).powi(2)).sqrt()
    }

    #[test]
    fn peak_amplitude_at_center() {
        for d in 1..=3 {
            let s0 = 0.7;
            let g = GaussianState::product(
                &one(1.0),
                d,
                vec![GaussianPacket::at_rest(vec![0.3; d], s0)],
            )
            .unwrap();
            let v = g.evaluate(&vec![0.3; d]);
            let expected = (2.0 * PI * s0 * s0).powf(-(d as f64) / 4.0);
            assert_relative_eq!(v.0[0].re, expected, max_relative = 1e-14);
            assert!(v.0[0].im.abs() < 1e-15);
        }
    }

    #[test]
    fn width_follows_free_dispersion() {
        let (s0, m) = (0.5, 1.7);
        let g = GaussianState::product(
            &one(m),
            1,
            vec![GaussianPacket::new(vec![0.0], s0, vec![1.3])],
        )
        .unwrap();
        for t in [0.1, 1.0, 4.0] {
            let gt = g.at_time(t);
            let (_, std) = gt.packet_extents()[0].clone();
            assert_relative_eq!(std, sigma_t(s0, t, m), max_relative = 1e-12);
            let (mean, _) = gt.packet_extents()[0].clone();
            assert_relative_eq!(mean[0], 1.3 * t / m, max_relative = 1e-12);
            assert_relative_eq!(gt.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn superposition_norm_matches_quadrature() {
        let species = SpeciesTable::with_masses(&[1.0, 2.0]).unwrap();
        let terms = vec![
            ProductTerm::new(
                c(1.0),
                vec![
                    GaussianPacket::new(vec![-1.0], 0.6, vec![0.5]),
                    GaussianPacket::new(vec![1.0], 0.9, vec![-0.2]),
                ],
            ),
            ProductTerm::new(
                Complex64::new(0.3, 0.7),
                vec![
                    GaussianPacket::new(vec![0.4], 0.8, vec![1.0]),
                    GaussianPacket::new(vec![-0.5], 0.5, vec![0.0]),
                ],
            ),
        ];
        let g = GaussianState::new(&species, 1, &terms).unwrap().at_time(0.8);
        let h = 0.02;
        let mut sum = 0.0;
        for i in -600..600 {
            for j in -600..600 {
                sum += g.evaluate(&[i as f64 * h, j as f64 * h]).norm_sqr();
            }
        }
        assert_relative_eq!(sum * h * h, 1.0, epsilon = 1e-9);
        assert_relative_eq!(g.norm(), 1.0, epsilon = 1e-12);

        // marginal integrates to one and matches a direct partial sum
        let x = 0.37;
        let mut direct = 0.0;
        for j in -600..600 {
            direct += g.evaluate(&[x, j as f64 * h]).norm_sqr() * h;
        }
        assert_relative_eq!(g.marginal_density(0, 0, x), direct, max_relative = 1e-9);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let species = SpeciesTable::new(
            vec![
                crate::config_space::Species::new(1.0, 2, "a"),
                crate::config_space::Species::new(3.0, 1, "b"),
            ],
            1.0,
        )
        .unwrap();
        let terms = vec![
            ProductTerm::new(
                c(1.0),
                vec![
                    GaussianPacket::new(vec![0.1, 0.2], 0.7, vec![0.5, -1.0])
                        .with_spinor(vec![c(1.0), Complex64::new(0.0, 1.0)]),
                    GaussianPacket::new(vec![1.0, -0.3], 0.9, vec![0.0, 0.4]),
                ],
            ),
            ProductTerm::new(
                Complex64::new(0.5, -0.2),
                vec![
                    GaussianPacket::new(vec![-0.4, 0.0], 0.5, vec![1.0, 0.0])
                        .with_spinor(vec![c(0.3), c(1.0)]),
                    GaussianPacket::new(vec![0.0, 0.5], 0.6, vec![-0.7, 0.2]),
                ],
            ),
        ];
        let g = GaussianState::new(&species, 2, &terms).unwrap().at_time(0.4);
        let x = [0.2, -0.1, 0.6, 0.3];
        let jet = g.jet(&x);
        let h = 1e-5;
        for a in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = g.evaluate(&xp).sub(&g.evaluate(&xm)).scale(c(0.5 / h));
            assert!(fd.max_abs_diff(&jet.gradients[a]) < 1e-8);
        }
        assert!(jet.value.max_abs_diff(&g.evaluate(&x)) < 1e-15);
    }

    #[test]
    fn antisymmetrizing_identical_packets_fails() {
        let species = SpeciesTable::uniform(2, 1.0).unwrap();
        let p = GaussianPacket::at_rest(vec![0.0], 1.0);
        assert!(GaussianState::symmetrized(
            &species,
            1,
            vec![p.clone(), p],
            Statistics::Fermion
        )
        .is_err());
    }

    #[test]
    fn sampler_is_seeded_and_centered() {
        let species = SpeciesTable::uniform(2, 1.0).unwrap();
        let g = GaussianState::symmetrized(
            &species,
            1,
            vec![
                GaussianPacket::at_rest(vec![-2.0], 0.5),
                GaussianPacket::at_rest(vec![2.0], 0.5),
            ],
            Statistics::Boson,
        )
        .unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<_> = (0..50).map(|_| g.sample(&mut r1)).collect();
        let b: Vec<_> = (0..50).map(|_| g.sample(&mut r2)).collect();
        assert_eq!(a, b);
        // symmetric state: mean of each coordinate is zero, mean of x² near 4.25
        let m = 20000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = g.sample(&mut r1);
            s += x[0];
            s2 += x[0] * x[0];
        }
        let mean = s / m as f64;
        let var = s2 / m as f64;
        assert!(mean.abs() < 4.0 * (4.25f64).sqrt() / (m as f64).sqrt());
        assert!((var - 4.25).abs() < 0.15);
    }
}
