use serde::{Deserialize, Serialize};

use crate::config_space::{permutations, LabeledConfiguration, UnorderedConfiguration};
use crate::error::{Error, Result};
use crate::wavefunction::{LocalJet, WaveFunction};

/// Which guidance equation moves the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityLaw {
    /// dQ_i/dt = j_i(Q)/ρ(Q) on labeled configuration space.
    Standard,
    /// dQ_i/dt = Σ_σ j_{σ(i)}(σQ) / Σ_σ ρ(σQ), well defined on unordered sets.
    IdentityBased,
}

impl VelocityLaw {
    pub fn name(self) -> &'static str {
        match self {
            VelocityLaw::Standard => "standard",
            VelocityLaw::IdentityBased => "identity_based",
        }
    }
}

impl std::str::FromStr for VelocityLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(VelocityLaw::Standard),
            "identity_based" | "identity" => Ok(VelocityLaw::IdentityBased),
            other => Err(format!("unknown law `{other}` (expected standard or identity_based)")),
        }
    }
}

/// Flat velocity vector plus the density that normalized it.
#[derive(Debug, Clone)]
pub struct FieldValue {
    pub velocity: Vec<f64>,
    pub density: f64,
}

/// Im ψ*∇_iψ contracted into per-slot currents, with guidance masses.
fn add_currents(jet: &LocalJet, hbar: f64, masses: &[f64], slot_of: impl Fn(usize) -> usize, out: &mut [f64]) {
    let d = jet.dim;
    for (i, &m) in masses.iter().enumerate() {
        let from = slot_of(i);
        for k in 0..d {
            out[i * d + k] += hbar / m * jet.im_flux(from, k);
        }
    }
}

pub(crate) fn standard_field(jet: &LocalJet, hbar: f64, masses: &[f64], floor: f64) -> Result<FieldValue> {
    let rho = jet.density();
    if !(rho > floor) {
        return Err(Error::Node {
            density: rho,
            threshold: floor,
        });
    }
    let mut v = vec![0.0; masses.len() * jet.dim];
    add_currents(jet, hbar, masses, |i| i, &mut v);
    for x in &mut v {
        *x /= rho;
    }
    Ok(FieldValue { velocity: v, density: rho })
}

/// Σ_σ over σQ: the point in slot i of Q sits in slot σ(i) of σQ, so it
/// receives j_{σ(i)}(σQ) computed with mass m_{σ(i)}.
pub(crate) fn symmetrized_field(
    jet_at: impl Fn(&[f64]) -> Result<LocalJet>,
    coords: &[f64],
    dim: usize,
    hbar: f64,
    masses: &[f64],
    floor: f64,
) -> Result<FieldValue> {
    let n = masses.len();
    let mut num = vec![0.0; n * dim];
    let mut den = 0.0;
    let mut permuted = vec![0.0; coords.len()];
    for sigma in permutations(n)? {
        for i in 0..n {
            let to = sigma.image(i);
            permuted[to * dim..(to + 1) * dim].copy_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        let jet = jet_at(&permuted)?;
        den += jet.density();
        for i in 0..n {
            let s = sigma.image(i);
            for k in 0..dim {
                num[i * dim + k] += hbar / masses[s] * jet.im_flux(s, k);
            }
        }
    }
    if !(den > floor) {
        return Err(Error::Node {
            density: den,
            threshold: floor,
        });
    }
    for x in &mut num {
        *x /= den;
    }
    Ok(FieldValue { velocity: num, density: den })
}

fn split(v: Vec<f64>, dim: usize) -> Vec<Vec<f64>> {
    v.chunks(dim).map(<[f64]>::to_vec).collect()
}

/// v_i = j_i/ρ at a labeled configuration, one vector per slot.
pub fn standard_velocity(psi: &WaveFunction, c: &LabeledConfiguration) -> Result<Vec<Vec<f64>>> {
    let jet = psi.jet(c)?;
    let f = standard_field(&jet, psi.species().hbar(), &psi.species().masses(), 0.0)?;
    Ok(split(f.velocity, psi.dim()))
}

/// Σ_σ ρ(σQ̂) for any labeled representative Q̂ of q.
pub fn symmetrized_density(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<f64> {
    let rep = q.representative();
    let mut total = 0.0;
    for sigma in permutations(q.len())? {
        total += psi.density(&rep.apply_permutation(&sigma)?)?;
    }
    Ok(total)
}

/// Identity-based velocity of each point of q, in canonical point order.
pub fn symmetrized_velocity(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<Vec<Vec<f64>>> {
    let f = symmetrized_velocity_labeled(psi, &q.representative())?;
    Ok(f)
}

/// Identity-based velocity of the point in each slot of a labeled representative.
pub fn symmetrized_velocity_labeled(psi: &WaveFunction, c: &LabeledConfiguration) -> Result<Vec<Vec<f64>>> {
    if c.len() != psi.n_particles() || c.dim() != psi.dim() {
        return Err(Error::SizeMismatch {
            expected: psi.n_particles() * psi.dim(),
            actual: c.len() * c.dim(),
        });
    }
    let f = symmetrized_field(
        |x| psi.jet_coords(x),
        c.coords(),
        psi.dim(),
        psi.species().hbar(),
        &psi.species().masses(),
        0.0,
    )?;
    Ok(split(f.velocity, psi.dim()))
}

/// Velocity under `law` at a labeled configuration.
pub fn velocity(psi: &WaveFunction, law: VelocityLaw, c: &LabeledConfiguration) -> Result<Vec<Vec<f64>>> {
    match law {
        VelocityLaw::Standard => standard_velocity(psi, c),
        VelocityLaw::IdentityBased => symmetrized_velocity_labeled(psi, c),
    }
}
