use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fiber::{lift, lift_jets};
use crate::config_space::{canonicalize, factorial, LabeledConfiguration, Numbering, UnorderedConfiguration};
use crate::error::{Error, Result};
use crate::wavefunction::{Spinor, WaveFunction};

/// Velocity of each point of q (canonical order) from the fiber form:
/// Σ_ν (ħ/m_{ν(x)}) Im ⟨φ_ν, ∇_x φ_ν⟩ / |φ|², where ∇_x φ_ν is the gradient
/// of ψ in slot ν(x) at q̂_ν.
pub fn phi_velocity(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<Vec<Vec<f64>>> {
    let n = q.len();
    let d = q.dim();
    let hbar = psi.species().hbar();
    let jets = lift_jets(psi, q)?;
    let norm_sqr: f64 = jets.iter().map(|j| j.density()).sum();
    if !(norm_sqr > 0.0) {
        return Err(Error::Node {
            density: norm_sqr,
            threshold: 0.0,
        });
    }
    let mut out = vec![vec![0.0; d]; n];
    for (rank, jet) in jets.iter().enumerate() {
        let nu = Numbering::from_rank(n, rank);
        for (p, v) in out.iter_mut().enumerate() {
            let slot = nu.label(p);
            let m = psi.species().mass(slot);
            for (k, vk) in v.iter_mut().enumerate() {
                *vk += hbar / m * jet.im_flux(slot, k);
            }
        }
    }
    for v in out.iter_mut().flatten() {
        *v /= norm_sqr;
    }
    Ok(out)
}

/// Terms of the fiber-form Schrödinger equation for one component at one
/// configuration.
#[derive(Debug, Clone)]
pub struct SchrodingerTerms {
    pub lhs: Spinor,
    pub rhs: Spinor,
}

/// Compares iħ∂φ_ν/∂t (centered difference of lift(ψ) over the snapshots
/// at t, t + Δt, t + 2Δt) with −Σ_x (ħ²/2m_{μ(x)}) ∇_x²φ_ν + Vφ_ν at t + Δt.
/// `mass_numbering` μ assigns the masses; the correct choice is μ = ν.
pub fn phi_schrodinger_terms(
    psi: &WaveFunction,
    q: &UnorderedConfiguration,
    nu: &Numbering,
    dt: f64,
    mass_numbering: &Numbering,
) -> Result<SchrodingerTerms> {
    psi.as_grid().ok_or(Error::GridRequired)?;
    if !(dt > 0.0) {
        return Err(Error::NegativeStep(dt));
    }
    let mid = psi.evolve(dt)?;
    let late = mid.evolve(dt)?;
    schrodinger_terms_from(psi, &mid, &late, q, nu, dt, mass_numbering)
}

fn schrodinger_terms_from(
    early: &WaveFunction,
    mid: &WaveFunction,
    late: &WaveFunction,
    q: &UnorderedConfiguration,
    nu: &Numbering,
    dt: f64,
    mass_numbering: &Numbering,
) -> Result<SchrodingerTerms> {
    let hbar = mid.species().hbar();
    let x = q.labeled(nu);
    let diff = late.evaluate(&x)?.sub(&early.evaluate(&x)?);
    let lhs = diff.scale(Complex64::new(0.0, hbar / (2.0 * dt)));
    let mut rhs = mid.potential_term_coords(x.coords())?;
    for p in 0..q.len() {
        let slot = nu.label(p);
        let m = mid.species().mass(mass_numbering.label(p));
        let lap = mid.laplacian_coords(x.coords(), slot)?;
        rhs.add_scaled(Complex64::new(-hbar * hbar / (2.0 * m), 0.0), &lap);
    }
    Ok(SchrodingerTerms { lhs, rhs })
}

/// sqrt(Σ|lhs − rhs|² / Σ|rhs|²) over the given configurations, for every
/// numbering, with masses assigned through `mass_permutation`∘ν (identity
/// for the correct assignment).
pub fn phi_schrodinger_residual(
    psi: &WaveFunction,
    configs: &[UnorderedConfiguration],
    dt: f64,
    mass_permutation: Option<&crate::config_space::Permutation>,
) -> Result<f64> {
    psi.as_grid().ok_or(Error::GridRequired)?;
    if !(dt > 0.0) {
        return Err(Error::NegativeStep(dt));
    }
    let mid = psi.evolve(dt)?;
    let late = mid.evolve(dt)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for q in configs {
        let n = q.len();
        for r in 0..factorial(n) {
            let nu = Numbering::from_rank(n, r);
            let masses = match mass_permutation {
                Some(p) => Numbering(p.compose(&nu.0)?),
                None => nu.clone(),
            };
            let t = schrodinger_terms_from(psi, &mid, &late, q, &nu, dt, &masses)?;
            num += t.lhs.sub(&t.rhs).norm_sqr();
            den += t.rhs.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidState("right-hand side vanishes at every configuration".into()));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    pub samples: usize,
    /// Monte Carlo ∫|ψ|² over labeled space.
    pub psi_norm_sqr: f64,
    /// Monte Carlo ∫|φ|² over unordered space, (1/N!)∫|φ∘canonicalize|².
    pub phi_norm_sqr: f64,
    pub ratio: f64,
    pub discrepancy: f64,
    /// Standard error of the ratio from the paired samples.
    pub standard_error: f64,
}

impl NormCheck {
    pub fn within(&self, standard_errors: f64) -> bool {
        self.discrepancy <= standard_errors * self.standard_error + 1e-15
    }
}

/// Importance-sampling proposal over ℝ^{dN} (or the grid box) that treats
/// every slot alike.
enum Proposal {
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    Uniform { length: f64 },
}

impl Proposal {
    fn for_wavefunction(psi: &WaveFunction) -> Self {
        if let Some(length) = psi.box_length() {
            return Proposal::Uniform { length };
        }
        let g = psi.as_gaussian().expect("analytic backend");
        let extents = g.packet_extents();
        let d = psi.dim();
        let mut mean = vec![0.0; d];
        for (m, _) in &extents {
            for (a, b) in mean.iter_mut().zip(m) {
                *a += b / extents.len() as f64;
            }
        }
        let mut std = vec![0.0f64; d];
        for (m, s) in &extents {
            for k in 0..d {
                std[k] = std[k].max((m[k] - mean[k]).abs() + 1.5 * s);
            }
        }
        Proposal::Gaussian { mean, std }
    }

    fn draw<R: Rng>(&self, rng: &mut R, n: usize, d: usize) -> (Vec<f64>, f64) {
        match self {
            Proposal::Uniform { length } => {
                let x = (0..n * d).map(|_| rng.random::<f64>() * length).collect();
                (x, length.powi((n * d) as i32).recip())
            }
            Proposal::Gaussian { mean, std } => {
                let mut x = Vec::with_capacity(n * d);
                let mut log_pdf = 0.0;
                for _ in 0..n {
                    for k in 0..d {
                        let z: f64 = rng.sample(StandardNormal);
                        x.push(mean[k] + std[k] * z);
                        log_pdf -= 0.5 * z * z + (std[k] * (2.0 * std::f64::consts::PI).sqrt()).ln();
                    }
                }
                (x, log_pdf.exp())
            }
        }
    }
}

/// Paired Monte Carlo estimate of ∫|φ|² over unordered space against
/// ∫|ψ|² over labeled space from the same draws.
pub fn transform_norm_check(psi: &WaveFunction, samples: usize, seed: u64) -> Result<NormCheck> {
    if samples < 2 {
        return Err(Error::InsufficientSamples { got: samples, min: 2 });
    }
    let n = psi.n_particles();
    let d = psi.dim();
    let proposal = Proposal::for_wavefunction(psi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = factorial(n) as f64;
    let mut a = Vec::with_capacity(samples);
    let mut b = Vec::with_capacity(samples);
    for _ in 0..samples {
        let (x, pdf) = proposal.draw(&mut rng, n, d);
        let c = LabeledConfiguration::new(d, x)?;
        let rho = psi.density(&c)?;
        let phi = match canonicalize(&c) {
            Ok((q, _)) => lift(psi, &q)?.norm_sqr(),
            Err(Error::Coincidence { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        a.push(phi / nf / pdf);
        b.push(rho / pdf);
    }
    let m = samples as f64;
    let mean_a = a.iter().sum::<f64>() / m;
    let mean_b = b.iter().sum::<f64>() / m;
    let ratio = mean_a / mean_b;
    let var = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ratio * y).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    Ok(NormCheck {
        samples,
        psi_norm_sqr: mean_b,
        phi_norm_sqr: mean_a,
        ratio,
        discrepancy: (ratio - 1.0).abs(),
        standard_error: (var / m).sqrt() / mean_b,
    })
}
