use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spinor::Spinor;
use crate::config_space::SpeciesTable;

/// One additive term of V on labeled configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialTerm {
    /// Σ_i ½ κ |x_i − c|², identical for every slot.
    Harmonic { stiffness: f64, center: Vec<f64> },
    /// Σ_{i<j} g exp(−|x_i − x_j|² / 2r²).
    PairGaussian { strength: f64, range: f64 },
    /// Σ_i (B + β x_{i,0} ẑ)·σ⁽ⁱ⁾ on every two-component slot.
    SpinField { field: [f64; 3], gradient: f64 },
}

/// A possibly matrix-valued potential, Hermitian on 𝕎 at every configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    #[serde(default)]
    pub terms: Vec<PotentialTerm>,
}

impl Potential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn harmonic(stiffness: f64, center: Vec<f64>) -> Self {
        Self {
            terms: vec![PotentialTerm::Harmonic { stiffness, center }],
        }
    }

    pub fn with_term(mut self, term: PotentialTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        !self
            .terms
            .iter()
            .any(|t| matches!(t, PotentialTerm::SpinField { .. }))
    }

    /// Scalar (identity-proportional) part at a flat configuration.
    pub fn scalar_at(&self, coords: &[f64], dim: usize) -> f64 {
        let n = coords.len() / dim;
        let point = |i: usize| &coords[i * dim..(i + 1) * dim];
        let mut v = 0.0;
        for term in &self.terms {
            match term {
                PotentialTerm::Harmonic { stiffness, center } => {
                    for i in 0..n {
                        let r2: f64 = point(i)
                            .iter()
                            .zip(center)
                            .map(|(x, c)| (x - c).powi(2))
                            .sum();
                        v += 0.5 * stiffness * r2;
                    }
                }
                PotentialTerm::PairGaussian { strength, range } => {
                    for i in 0..n {
                        for j in i + 1..n {
                            let r2: f64 = point(i)
                                .iter()
                                .zip(point(j))
                                .map(|(a, b)| (a - b).powi(2))
                                .sum();
                            v += strength * (-r2 / (2.0 * range * range)).exp();
                        }
                    }
                }
                PotentialTerm::SpinField { .. } => {}
            }
        }
        v
    }

    /// V·s at a configuration.
    pub fn apply(
        &self,
        coords: &[f64],
        dim: usize,
        species: &SpeciesTable,
        s: &Spinor,
    ) -> Spinor {
        let mut out = s.scale(Complex64::new(self.scalar_at(coords, dim), 0.0));
        for term in &self.terms {
            if let PotentialTerm::SpinField { field, gradient } = term {
                let dims = species.internal_dims();
                for (i, &k) in dims.iter().enumerate() {
                    if k != 2 {
                        continue;
                    }
                    let b = [
                        field[0],
                        field[1],
                        field[2] + gradient * coords[i * dim],
                    ];
                    apply_pauli(&dims, i, b, s, &mut out);
                }
            }
        }
        out
    }

    /// Full Hermitian matrix on 𝕎 at a configuration.
    pub fn matrix_at(&self, coords: &[f64], dim: usize, species: &SpeciesTable) -> DMatrix<Complex64> {
        let w = species.spin_dim();
        let mut m = DMatrix::zeros(w, w);
        for col in 0..w {
            let mut e = Spinor::zeros(w);
            e.0[col] = Complex64::new(1.0, 0.0);
            let v = self.apply(coords, dim, species, &e);
            for row in 0..w {
                m[(row, col)] = v.0[row];
            }
        }
        m
    }
}

/// out += (b·σ) acting on slot `slot` of the tensor product.
fn apply_pauli(dims: &[usize], slot: usize, b: [f64; 3], s: &Spinor, out: &mut Spinor) {
    let stride: usize = dims[slot + 1..].iter().product();
    let i = Complex64::new(0.0, 1.0);
    for idx in 0..s.len() {
        let digit = (idx / stride) % 2;
        let partner = if digit == 0 { idx + stride } else { idx - stride };
        // σx, σy, σz matrix elements ⟨digit|σ|·⟩
        let sign = if digit == 0 { 1.0 } else { -1.0 };
        let off = Complex64::new(b[0], 0.0) - i * sign * b[1];
        out.0[idx] += off * s.0[partner] + sign * b[2] * s.0[idx];
    }
}

/// e^{−iMτ/ħ} for Hermitian M via its eigendecomposition.
pub(crate) fn hermitian_exp(m: &DMatrix<Complex64>, tau: f64, hbar: f64) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| {
        Complex64::from_polar(1.0, -l * tau / hbar)
    }));
    u * phases * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::Species;

    #[test]
    fn spin_field_matrix_is_hermitian_and_exponential_unitary() {
        let species = SpeciesTable::new(
            vec![Species::new(1.0, 2, "a"), Species::new(1.0, 2, "b")],
            1.0,
        )
        .unwrap();
        let v = Potential::harmonic(1.0, vec![0.0]).with_term(PotentialTerm::SpinField {
            field: [0.3, -0.2, 0.5],
            gradient: 0.7,
        });
        let m = v.matrix_at(&[0.4, -1.2], 1, &species);
        assert!((&m - m.adjoint()).norm() < 1e-14);
        let u = hermitian_exp(&m, 0.37, 1.0);
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert!((&u * u.adjoint() - id).norm() < 1e-12);
        // harmonic part on the diagonal: ½(0.16 + 1.44) = 0.8, plus σz terms
        let z0 = 0.5 + 0.7 * 0.4;
        let z1 = 0.5 + 0.7 * -1.2;
        assert!((m[(0, 0)].re - (0.8 + z0 + z1)).abs() < 1e-14);
    }
}
