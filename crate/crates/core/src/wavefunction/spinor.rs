use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Element of 𝕎 = ℂ^{k₁} ⊗ ⋯ ⊗ ℂ^{k_N}, multi-index (s₁, …, s_N) in
/// row-major order (s₁ slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spinor(pub Vec<Complex64>);

impl Spinor {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn scalar(z: Complex64) -> Self {
        Self(vec![z])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨self, other⟩ = Σ_s conj(self_s)·other_s.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, z: Complex64) -> Spinor {
        Spinor(self.0.iter().map(|a| a * z).collect())
    }

    pub fn add_scaled(&mut self, z: Complex64, other: &Spinor) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += z * b;
        }
    }

    pub fn sub(&self, other: &Spinor) -> Spinor {
        Spinor(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Kronecker product, `self` as the slower index.
    pub fn tensor(&self, other: &Spinor) -> Spinor {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        Spinor(out)
    }

    pub fn max_abs_diff(&self, other: &Spinor) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Value and all first derivatives of ψ at one configuration.
#[derive(Debug, Clone)]
pub struct LocalJet {
    pub value: Spinor,
    /// ∂ψ/∂x_{i,k} stored at index `i * dim + k`.
    pub gradients: Vec<Spinor>,
    pub dim: usize,
}

impl LocalJet {
    pub fn density(&self) -> f64 {
        self.value.norm_sqr()
    }

    /// Im ψ*∂_{i,k}ψ, without the ħ/m prefactor.
    pub fn im_flux(&self, i: usize, k: usize) -> f64 {
        self.value.inner(&self.gradients[i * self.dim + k]).im
    }

    /// j_i = (ħ/m) Im ψ*∇_iψ.
    pub fn current(&self, i: usize, hbar_over_mass: f64) -> Vec<f64> {
        (0..self.dim)
            .map(|k| hbar_over_mass * self.im_flux(i, k))
            .collect()
    }
}
