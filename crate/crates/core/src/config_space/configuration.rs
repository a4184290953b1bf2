use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::permutation::{Numbering, Permutation};
use crate::error::{Error, Result};

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// An ordered N-tuple of points in ℝ^d, stored flat (particle-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

impl LabeledConfiguration {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::SizeMismatch {
                expected: dim.max(1),
                actual: coords.len(),
            });
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!("coordinate {i} is not finite")));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidState("points of differing dimension".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// σQ = (Q_{σ⁻¹(1)}, …, Q_{σ⁻¹(N)}).
    pub fn apply_permutation(&self, sigma: &Permutation) -> Result<Self> {
        if sigma.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: sigma.len(),
            });
        }
        let mut coords = vec![0.0; self.coords.len()];
        for i in 0..self.len() {
            let to = sigma.image(i);
            coords[to * self.dim..(to + 1) * self.dim].copy_from_slice(self.point(i));
        }
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    /// Euclidean distance in ℝ^{dN}.
    pub fn distance(&self, other: &Self) -> f64 {
        distance(&self.coords, &other.coords)
    }
}

/// An N-point subset of ℝ^d, represented by its points in strictly increasing
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnorderedConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

impl UnorderedConfiguration {
    /// Builds from points in any order; fails on coincidences.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let labeled = LabeledConfiguration::from_points(points)?;
        Ok(canonicalize(&labeled)?.0)
    }

    /// Accepts coordinates only if already in canonical order.
    pub fn from_canonical(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let c = LabeledConfiguration::new(dim, coords)?;
        for i in 1..c.len() {
            match lex_cmp(c.point(i - 1), c.point(i)) {
                Ordering::Less => {}
                Ordering::Equal => {
                    return Err(Error::Coincidence {
                        first: i - 1,
                        second: i,
                    })
                }
                Ordering::Greater => {
                    return Err(Error::InvalidState("points not in canonical order".into()))
                }
            }
        }
        Ok(Self {
            dim,
            coords: c.coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.coords[p * self.dim..(p + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The canonical representative read as a labeled configuration.
    pub fn representative(&self) -> LabeledConfiguration {
        LabeledConfiguration {
            dim: self.dim,
            coords: self.coords.clone(),
        }
    }

    /// q̂ = (ν⁻¹(1), …, ν⁻¹(N)): the labeled configuration in which the
    /// point numbered ℓ sits in slot ℓ.
    pub fn labeled(&self, nu: &Numbering) -> LabeledConfiguration {
        let mut coords = vec![0.0; self.coords.len()];
        for p in 0..self.len() {
            let l = nu.label(p);
            coords[l * self.dim..(l + 1) * self.dim].copy_from_slice(self.point(p));
        }
        LabeledConfiguration {
            dim: self.dim,
            coords,
        }
    }

    /// Smallest distance between two distinct points (∞ for N = 1).
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                gap = gap.min(distance(self.point(a), self.point(b)));
            }
        }
        gap
    }

    /// Canonical index of a point equal (bitwise) to `x`.
    pub fn find_point(&self, x: &[f64]) -> Option<usize> {
        self.points().position(|p| p == x)
    }
}

/// Sorts the points lexicographically. The returned numbering sends each
/// canonical point to its original slot, so `unordered.labeled(&nu)`
/// reproduces the input exactly.
pub fn canonicalize(c: &LabeledConfiguration) -> Result<(UnorderedConfiguration, Numbering)> {
    let n = c.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(c.point(a), c.point(b)));
    for w in order.windows(2) {
        if lex_cmp(c.point(w[0]), c.point(w[1])) == Ordering::Equal {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::Coincidence { first, second });
        }
    }
    let mut coords = Vec::with_capacity(c.coords.len());
    for &i in &order {
        coords.extend_from_slice(c.point(i));
    }
    let nu = Numbering(Permutation::from_images(order).expect("sort order is a bijection"));
    Ok((
        UnorderedConfiguration { dim: c.dim, coords },
        nu,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::permutations;
    use proptest::prelude::*;

    fn lc(points: &[&[f64]]) -> LabeledConfiguration {
        LabeledConfiguration::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn canonicalize_sorts_and_numbers() {
        let (q, nu) = canonicalize(&lc(&[&[3.0], &[1.0]])).unwrap();
        assert_eq!(q.coords(), &[1.0, 3.0]);
        // 1.0 was slot 1 (label 2 one-based), 3.0 was slot 0
        assert_eq!(nu.label(0), 1);
        assert_eq!(nu.label(1), 0);

        let (q, nu) = canonicalize(&lc(&[&[5.0]])).unwrap();
        assert_eq!(q.coords(), &[5.0]);
        assert_eq!(nu.label(0), 0);
    }

    #[test]
    fn coincidence_rejected() {
        assert!(matches!(
            canonicalize(&lc(&[&[2.0], &[2.0]])),
            Err(Error::Coincidence { .. })
        ));
        assert!(UnorderedConfiguration::from_canonical(1, vec![1.0, 1.0]).is_err());
        assert!(UnorderedConfiguration::from_canonical(1, vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn permutation_examples() {
        let c = lc(&[&[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]]);
        assert_eq!(c.apply_permutation(&Permutation::identity(3)).unwrap(), c);
        let swap = Permutation::transposition(2, 0, 1);
        let ab = lc(&[&[1.0], &[2.0]]);
        assert_eq!(ab.apply_permutation(&swap).unwrap(), lc(&[&[2.0], &[1.0]]));
        // 1→2→3→1: slot i of the output holds input slot σ⁻¹(i)
        let cyc = Permutation::cycle(3, &[0, 1, 2]).unwrap();
        let abc = lc(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(
            abc.apply_permutation(&cyc).unwrap(),
            lc(&[&[3.0], &[1.0], &[2.0]])
        );
        assert!(abc.apply_permutation(&swap).is_err());
    }

    fn config_strategy() -> impl Strategy<Value = LabeledConfiguration> {
        (1usize..=3, 1usize..=4).prop_flat_map(|(d, n)| {
            prop::collection::vec(-10.0f64..10.0, d * n)
                .prop_map(move |v| LabeledConfiguration::new(d, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn restore_via_numbering(c in config_strategy()) {
            if let Ok((q, nu)) = canonicalize(&c) {
                prop_assert_eq!(q.labeled(&nu), c);
            }
        }

        #[test]
        fn canonical_form_is_permutation_invariant(c in config_strategy()) {
            if let Ok((q, _)) = canonicalize(&c) {
                for s in permutations(c.len()).unwrap() {
                    let moved = c.apply_permutation(&s).unwrap();
                    prop_assert_eq!(&canonicalize(&moved).unwrap().0, &q);
                    let back = moved.apply_permutation(&s.inverse()).unwrap();
                    prop_assert_eq!(&back, &c);
                }
            }
        }
    }
}
