use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fiber::{lift, FiberElement};
use crate::config_space::{factorial, permutations, Numbering, Permutation, Statistics, UnorderedConfiguration};
use crate::error::{Error, Result};
use crate::wavefunction::{Spinor, WaveFunction};

/// R_σ on 𝕎 = ⊗ℂ^{k_i}: the factor in slot i moves to slot σ(i), so the
/// basis vector e_{s₁…s_N} goes to e_{s_{σ⁻¹(1)}…s_{σ⁻¹(N)}}.
pub fn permutation_representation(sigma: &Permutation, s: &Spinor, dims: &[usize]) -> Result<Spinor> {
    let n = dims.len();
    if sigma.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: sigma.len(),
        });
    }
    if (0..n).any(|i| dims[sigma.image(i)] != dims[i]) {
        return Err(Error::UnequalInternalDims);
    }
    let w: usize = dims.iter().product();
    if s.len() != w {
        return Err(Error::SizeMismatch {
            expected: w,
            actual: s.len(),
        });
    }
    let mut out = Spinor::zeros(w);
    let mut multi = vec![0usize; n];
    let mut target = vec![0usize; n];
    for (flat, v) in s.0.iter().enumerate() {
        let mut rest = flat;
        for i in (0..n).rev() {
            multi[i] = rest % dims[i];
            rest /= dims[i];
        }
        for i in 0..n {
            target[sigma.image(i)] = multi[i];
        }
        let to = target.iter().zip(dims).fold(0, |acc, (&t, &k)| acc * k + t);
        out.0[to] = *v;
    }
    Ok(out)
}

/// A group of slot permutations with a one-dimensional character, acting on
/// fibers by (T_π e)_{π∘ν} = χ(π) R_π e_ν. Its fixed points form the
/// boson/fermion (or mixed-species) subbundle.
#[derive(Debug, Clone)]
pub struct ExchangeGroup {
    n: usize,
    elements: Vec<(Permutation, f64)>,
    blocks: Vec<(Vec<usize>, Statistics)>,
}

impl ExchangeGroup {
    /// All of S_N with one statistics.
    pub fn full(n: usize, statistics: Statistics) -> Result<Self> {
        Self::blocks(n, &[((0..n).collect(), statistics)])
    }

    /// Independent permutations within each block of slots; slots outside
    /// every block are fixed.
    pub fn blocks(n: usize, blocks: &[(Vec<usize>, Statistics)]) -> Result<Self> {
        let mut seen = vec![false; n];
        for (slots, _) in blocks {
            for &s in slots {
                if s >= n || seen[s] {
                    return Err(Error::InvalidSpecies(format!("slot {s} repeated or out of range")));
                }
                seen[s] = true;
            }
        }
        let mut elements = vec![(Permutation::identity(n), 1.0)];
        for (slots, stats) in blocks.iter().filter(|(s, _)| s.len() > 1) {
            let local: Vec<Permutation> = permutations(slots.len())?.collect();
            let mut next = Vec::with_capacity(elements.len() * local.len());
            for (g, chi) in &elements {
                for p in &local {
                    let mut images = g.images().to_vec();
                    for (a, &slot) in slots.iter().enumerate() {
                        images[slot] = g.image(slots[p.image(a)]);
                    }
                    next.push((Permutation::from_images(images)?, chi * stats.character(p)));
                }
            }
            elements = next;
        }
        let mut all: Vec<(Vec<usize>, Statistics)> = blocks.to_vec();
        for (s, used) in seen.iter().enumerate() {
            if !used {
                all.push((vec![s], Statistics::Boson));
            }
        }
        Ok(Self {
            n,
            elements,
            blocks: all,
        })
    }

    /// Blocks of slots sharing a species tag.
    pub fn by_tag(tags: &[&str], statistics: impl Fn(&str) -> Statistics) -> Result<Self> {
        let mut order: Vec<&str> = Vec::new();
        for t in tags {
            if !order.contains(t) {
                order.push(t);
            }
        }
        let blocks: Vec<(Vec<usize>, Statistics)> = order
            .iter()
            .map(|tag| {
                let slots = tags.iter().enumerate().filter(|(_, t)| *t == tag).map(|(i, _)| i).collect();
                (slots, statistics(tag))
            })
            .collect();
        Self::blocks(tags.len(), &blocks)
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[(Permutation, f64)] {
        &self.elements
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if dims.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                actual: dims.len(),
            });
        }
        for (slots, _) in &self.blocks {
            if slots.iter().any(|&s| dims[s] != dims[slots[0]]) {
                return Err(Error::UnequalInternalDims);
            }
        }
        Ok(())
    }

    /// T_π for the group element `pi` with character `chi`.
    pub fn act(&self, pi: &Permutation, chi: f64, e: &FiberElement) -> Result<FiberElement> {
        let dims = e.internal_dims();
        let mut out = e.zeros_like();
        for (nu, s) in e.iter() {
            let moved = Numbering(pi.compose(&nu.0)?);
            *out.component_mut(&moved) = permutation_representation(pi, s, dims)?.scale(chi.into());
        }
        Ok(out)
    }

    /// P = (1/|G|) Σ_π T_π.
    pub fn project(&self, e: &FiberElement) -> Result<FiberElement> {
        self.check_dims(e.internal_dims())?;
        if e.n_points() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                actual: e.n_points(),
            });
        }
        let mut acc = vec![Spinor::zeros(e.spin_dim()); e.components().len()];
        let weight = Complex64::new(1.0 / self.order() as f64, 0.0);
        for (pi, chi) in &self.elements {
            let t = self.act(pi, *chi, e)?;
            for (a, s) in acc.iter_mut().zip(t.components()) {
                a.add_scaled(weight, s);
            }
        }
        Ok(e.with_components(acc))
    }

    /// ‖Pe − e‖ relative to ‖e‖ (absolute when e = 0).
    pub fn constraint_residual(&self, e: &FiberElement) -> Result<f64> {
        let diff = self.project(e)?.sub(e).norm();
        let norm = e.norm();
        Ok(if norm > 0.0 { diff / norm } else { diff })
    }

    /// Dense matrix of P on ⊕_ν 𝕎 in the numbering-major basis.
    pub fn projector_matrix(&self, dims: &[usize]) -> Result<DMatrix<Complex64>> {
        self.check_dims(dims)?;
        let n = self.n;
        let w: usize = dims.iter().product();
        let size = factorial(n) * w;
        let base = UnorderedConfiguration::from_canonical(1, (0..n).map(|i| i as f64).collect())?;
        let mut m = DMatrix::zeros(size, size);
        for col in 0..size {
            let mut comps = vec![Spinor::zeros(w); factorial(n)];
            comps[col / w].0[col % w] = Complex64::new(1.0, 0.0);
            let e = FiberElement::new(base.clone(), dims.to_vec(), comps)?;
            for (row, v) in self.project(&e)?.to_vector().into_iter().enumerate() {
                m[(row, col)] = v;
            }
        }
        Ok(m)
    }

    /// Rank of P counted from its singular values.
    pub fn projector_rank(&self, dims: &[usize]) -> Result<usize> {
        let m = self.projector_matrix(dims)?;
        Ok(m.singular_values().iter().filter(|&&s| s > 1e-8).count())
    }

    /// (N!/ΠN_j!)·Π k_j^{N_j}.
    pub fn expected_rank(&self, dims: &[usize]) -> usize {
        let denom: usize = self.blocks.iter().map(|(s, _)| factorial(s.len())).product();
        factorial(self.n) / denom * dims.iter().product::<usize>()
    }
}

fn pure_group(e: &FiberElement, statistics: Statistics) -> Result<ExchangeGroup> {
    let dims = e.internal_dims();
    if dims.iter().any(|&k| k != dims[0]) {
        return Err(Error::UnequalInternalDims);
    }
    ExchangeGroup::full(e.n_points(), statistics)
}

/// Orthogonal projection onto the boson subbundle.
pub fn project_boson(e: &FiberElement) -> Result<FiberElement> {
    pure_group(e, Statistics::Boson)?.project(e)
}

/// Orthogonal projection onto the fermion subbundle.
pub fn project_fermion(e: &FiberElement) -> Result<FiberElement> {
    pure_group(e, Statistics::Fermion)?.project(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbundleCheck {
    pub residual: f64,
    pub satisfied: bool,
    pub rank: usize,
    pub expected_rank: usize,
}

/// Checks lift(ψ, q) against the within-block exchange constraints and
/// reports the explicit projector rank next to the closed-form dimension.
pub fn mixed_species_subbundle_check(
    psi: &WaveFunction,
    blocks: &[(Vec<usize>, Statistics)],
    q: &UnorderedConfiguration,
) -> Result<SubbundleCheck> {
    let group = ExchangeGroup::blocks(psi.n_particles(), blocks)?;
    let e = lift(psi, q)?;
    let residual = group.constraint_residual(&e)?;
    let dims = psi.species().internal_dims();
    Ok(SubbundleCheck {
        residual,
        satisfied: residual <= 1e-10,
        rank: group.projector_rank(&dims)?,
        expected_rank: group.expected_rank(&dims),
    })
}
