use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config_space::{
    canonicalize, factorial, LabeledConfiguration, Numbering, Permutation, UnorderedConfiguration,
};
use crate::error::{Error, Result};
use crate::wavefunction::{LocalJet, Spinor, WaveFunction};

/// φ(q) ∈ ⊕_ν 𝕎: one spinor per numbering of the points of q, stored at the
/// Lehmer rank of ν (ν maps canonical point index to label).
#[derive(Debug, Clone, PartialEq)]
pub struct FiberElement {
    base: UnorderedConfiguration,
    internal_dims: Vec<usize>,
    components: Vec<Spinor>,
}

impl FiberElement {
    pub fn new(base: UnorderedConfiguration, internal_dims: Vec<usize>, components: Vec<Spinor>) -> Result<Self> {
        let n = base.len();
        if internal_dims.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: internal_dims.len(),
            });
        }
        if components.len() != factorial(n) {
            return Err(Error::SizeMismatch {
                expected: factorial(n),
                actual: components.len(),
            });
        }
        let w: usize = internal_dims.iter().product();
        if let Some(bad) = components.iter().find(|s| s.len() != w) {
            return Err(Error::SizeMismatch {
                expected: w,
                actual: bad.len(),
            });
        }
        Ok(Self {
            base,
            internal_dims,
            components,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            components: vec![Spinor::zeros(self.spin_dim()); self.components.len()],
            ..self.clone()
        }
    }

    pub fn base(&self) -> &UnorderedConfiguration {
        &self.base
    }

    pub fn internal_dims(&self) -> &[usize] {
        &self.internal_dims
    }

    pub fn n_points(&self) -> usize {
        self.base.len()
    }

    pub fn spin_dim(&self) -> usize {
        self.internal_dims.iter().product()
    }

    pub fn components(&self) -> &[Spinor] {
        &self.components
    }

    pub fn component(&self, nu: &Numbering) -> &Spinor {
        &self.components[nu.rank()]
    }

    pub fn component_mut(&mut self, nu: &Numbering) -> &mut Spinor {
        &mut self.components[nu.rank()]
    }

    /// Pairs (ν, φ_ν) in rank order.
    pub fn iter(&self) -> impl Iterator<Item = (Numbering, &Spinor)> {
        let n = self.n_points();
        self.components
            .iter()
            .enumerate()
            .map(move |(r, s)| (Numbering::from_rank(n, r), s))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(Spinor::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Σ_ν ⟨a_ν, b_ν⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            components: self.components.iter().map(|a| a.scale(z)).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn with_components(&self, components: Vec<Spinor>) -> Self {
        Self {
            components,
            ..self.clone()
        }
    }

    /// Flattened coefficient vector, numbering-major.
    pub fn to_vector(&self) -> Vec<Complex64> {
        self.components.iter().flat_map(|s| s.0.iter().copied()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fiber serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidState(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct FiberComponentDoc {
    /// Label (1-based) of each base point, in canonical point order.
    numbering: Vec<usize>,
    value: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct FiberDoc {
    base: Vec<Vec<f64>>,
    internal_dims: Vec<usize>,
    components: Vec<FiberComponentDoc>,
}

impl Serialize for FiberElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FiberDoc {
            base: self.base.points().map(<[f64]>::to_vec).collect(),
            internal_dims: self.internal_dims.clone(),
            components: self
                .iter()
                .map(|(nu, s)| FiberComponentDoc {
                    numbering: nu.0.images().iter().map(|l| l + 1).collect(),
                    value: s.0.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiberElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = FiberDoc::deserialize(deserializer)?;
        let base = UnorderedConfiguration::from_points(&doc.base).map_err(D::Error::custom)?;
        if base.points().zip(&doc.base).any(|(a, b)| a != b.as_slice()) {
            return Err(D::Error::custom("base points must be in canonical order"));
        }
        let n = base.len();
        let w: usize = doc.internal_dims.iter().product();
        let mut components: Vec<Option<Spinor>> = vec![None; factorial(n)];
        for c in doc.components {
            if c.numbering.iter().any(|&l| l == 0) {
                return Err(D::Error::custom("numbering labels start at 1"));
            }
            let perm = Permutation::from_images(c.numbering.iter().map(|l| l - 1).collect())
                .map_err(D::Error::custom)?;
            if perm.len() != n {
                return Err(D::Error::custom("numbering length differs from the base size"));
            }
            let slot = &mut components[perm.lehmer_rank()];
            if slot.is_some() {
                return Err(D::Error::custom("duplicate numbering"));
            }
            if c.value.len() != w {
                return Err(D::Error::custom("component has the wrong spinor dimension"));
            }
            *slot = Some(Spinor(c.value));
        }
        let components = components
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| D::Error::custom("missing numberings"))?;
        FiberElement::new(base, doc.internal_dims, components).map_err(D::Error::custom)
    }
}

/// φ_ν(q) = ψ(q̂_ν) for every numbering ν.
pub fn lift(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<FiberElement> {
    check_base(psi, q)?;
    let n = q.len();
    let components = (0..factorial(n))
        .map(|r| psi.evaluate(&q.labeled(&Numbering::from_rank(n, r))))
        .collect::<Result<Vec<_>>>()?;
    FiberElement::new(q.clone(), psi.species().internal_dims(), components)
}

/// Value and gradient of ψ at q̂_ν for every numbering ν.
pub fn lift_jets(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<Vec<LocalJet>> {
    check_base(psi, q)?;
    let n = q.len();
    (0..factorial(n))
        .map(|r| psi.jet(&q.labeled(&Numbering::from_rank(n, r))))
        .collect()
}

fn check_base(psi: &WaveFunction, q: &UnorderedConfiguration) -> Result<()> {
    if q.len() != psi.n_particles() || q.dim() != psi.dim() {
        return Err(Error::SizeMismatch {
            expected: psi.n_particles() * psi.dim(),
            actual: q.len() * q.dim(),
        });
    }
    Ok(())
}

/// ψ(c) recovered from φ: the component at the numbering induced by c's order.
pub fn restrict(e: &FiberElement, c: &LabeledConfiguration) -> Result<Spinor> {
    let (q, nu) = canonicalize(c)?;
    if q.coords() != e.base().coords() {
        return Err(Error::PointSetMismatch);
    }
    Ok(e.component(&nu).clone())
}

/// A cross-section realized by lifting a wave function on demand.
#[derive(Debug, Clone)]
pub struct BundleSection {
    psi: WaveFunction,
}

impl BundleSection {
    pub fn new(psi: WaveFunction) -> Self {
        Self { psi }
    }

    pub fn wavefunction(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn at(&self, q: &UnorderedConfiguration) -> Result<FiberElement> {
        lift(&self.psi, q)
    }
}
