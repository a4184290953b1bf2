use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass, internal dimension and tag of one particle slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub mass: f64,
    pub internal_dim: usize,
    pub tag: String,
}

impl Species {
    pub fn new(mass: f64, internal_dim: usize, tag: impl Into<String>) -> Self {
        Self {
            mass,
            internal_dim,
            tag: tag.into(),
        }
    }

    pub fn scalar(mass: f64, tag: impl Into<String>) -> Self {
        Self::new(mass, 1, tag)
    }
}

/// Per-slot particle data plus the value of ħ in simulation units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTable {
    particles: Vec<Species>,
    hbar: f64,
}

impl SpeciesTable {
    pub fn new(particles: Vec<Species>, hbar: f64) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidSpecies("at least one particle required".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidSpecies(format!("hbar must be positive, got {hbar}")));
        }
        for (i, p) in particles.iter().enumerate() {
            if !(p.mass > 0.0 && p.mass.is_finite()) {
                return Err(Error::InvalidSpecies(format!(
                    "particle {i}: mass must be positive, got {}",
                    p.mass
                )));
            }
            if p.internal_dim == 0 {
                return Err(Error::InvalidSpecies(format!(
                    "particle {i}: internal dimension must be at least 1"
                )));
            }
        }
        Ok(Self { particles, hbar })
    }

    /// `n` spinless particles of equal mass, ħ = 1.
    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        Self::new(vec![Species::scalar(mass, "x"); n], 1.0)
    }

    /// Spinless particles with the given masses, ħ = 1.
    pub fn with_masses(masses: &[f64]) -> Result<Self> {
        let particles = masses
            .iter()
            .enumerate()
            .map(|(i, &m)| Species::scalar(m, format!("p{i}")))
            .collect();
        Self::new(particles, 1.0)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.particles[i].mass
    }

    pub fn masses(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.mass).collect()
    }

    pub fn internal_dim(&self, i: usize) -> usize {
        self.particles[i].internal_dim
    }

    pub fn internal_dims(&self) -> Vec<usize> {
        self.particles.iter().map(|p| p.internal_dim).collect()
    }

    /// Dimension of the tensor-product spin space k₁·k₂·…·k_N.
    pub fn spin_dim(&self) -> usize {
        self.particles.iter().map(|p| p.internal_dim).product()
    }

    pub fn particles(&self) -> &[Species] {
        &self.particles
    }

    pub fn all_masses_equal(&self) -> bool {
        self.particles.iter().all(|p| p.mass == self.particles[0].mass)
    }

    /// Same table with different masses, used by negative controls.
    pub fn with_replaced_masses(&self, masses: &[f64]) -> Result<Self> {
        if masses.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: masses.len(),
            });
        }
        let particles = self
            .particles
            .iter()
            .zip(masses)
            .map(|(p, &m)| Species { mass: m, ..p.clone() })
            .collect();
        Self::new(particles, self.hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_tables() {
        assert!(SpeciesTable::new(vec![], 1.0).is_err());
        assert!(SpeciesTable::new(vec![Species::scalar(0.0, "a")], 1.0).is_err());
        assert!(SpeciesTable::new(vec![Species::new(1.0, 0, "a")], 1.0).is_err());
        assert!(SpeciesTable::new(vec![Species::scalar(1.0, "a")], -1.0).is_err());
    }

    #[test]
    fn spin_dim_is_product() {
        let t = SpeciesTable::new(
            vec![Species::new(1.0, 2, "e"), Species::new(2.0, 3, "m")],
            1.0,
        )
        .unwrap();
        assert_eq!(t.spin_dim(), 6);
        assert!(!t.all_masses_equal());
    }
}

/// Exchange statistics of a block of identical particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// 1 for bosons, (−1)^σ for fermions.
    pub fn character(self, sigma: &super::Permutation) -> f64 {
        match self {
            Statistics::Boson => 1.0,
            Statistics::Fermion => f64::from(sigma.sign()),
        }
    }
}
