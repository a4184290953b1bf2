use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest N for which the N! permutations are enumerated by default.
pub const DEFAULT_MAX_PARTICLES: usize = 8;

/// A bijection of {0, …, N−1}, stored as its image list: `σ(i) = images[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Self::from_images(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &j in &images {
            if j >= n || seen[j] {
                return Err(Error::NotBijective(images));
            }
            seen[j] = true;
        }
        Ok(Self { images })
    }

    /// Transposition of `a` and `b` in S_n.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Self { images }
    }

    /// The cycle `c[0] → c[1] → … → c[last] → c[0]`.
    pub fn cycle(n: usize, c: &[usize]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        for (k, &from) in c.iter().enumerate() {
            images[from] = c[(k + 1) % c.len()];
        }
        Self::from_images(images)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        })
    }

    /// (−1)^σ, by cycle decomposition: a cycle of length ℓ contributes (−1)^(ℓ−1).
    pub fn sign(&self) -> i32 {
        let mut seen = vec![false; self.len()];
        let mut transpositions = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut j = start;
            let mut len = 0;
            while !seen[j] {
                seen[j] = true;
                j = self.images[j];
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Position of this permutation in lexicographic order of image lists.
    pub fn lehmer_rank(&self) -> usize {
        let n = self.len();
        let mut rank = 0;
        for i in 0..n {
            let smaller = self.images[i + 1..]
                .iter()
                .filter(|&&x| x < self.images[i])
                .count();
            rank += smaller * factorial(n - 1 - i);
        }
        rank
    }

    pub fn from_lehmer_rank(n: usize, mut rank: usize) -> Self {
        let mut pool: Vec<usize> = (0..n).collect();
        let mut images = Vec::with_capacity(n);
        for i in 0..n {
            let f = factorial(n - 1 - i);
            let k = rank / f;
            rank %= f;
            images.push(pool.remove(k));
        }
        Self { images }
    }

    /// Reorders a slice of per-slot items as σ does to a configuration:
    /// output slot `σ(i)` receives input slot `i`.
    pub fn permute_slots<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let inv = self.inverse();
        (0..self.len()).map(|i| items[inv.images[i]].clone()).collect()
    }
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Heap's algorithm, iterative form. Yields each element of S_n exactly once.
#[derive(Debug, Clone)]
pub struct Permutations {
    current: Vec<usize>,
    counters: Vec<usize>,
    index: usize,
    started: bool,
}

impl Iterator for Permutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        if !self.started {
            self.started = true;
            return Some(Permutation {
                images: self.current.clone(),
            });
        }
        let n = self.current.len();
        while self.index < n {
            let i = self.index;
            if self.counters[i] < i {
                if i % 2 == 0 {
                    self.current.swap(0, i);
                } else {
                    self.current.swap(self.counters[i], i);
                }
                self.counters[i] += 1;
                self.index = 1;
                return Some(Permutation {
                    images: self.current.clone(),
                });
            }
            self.counters[i] = 0;
            self.index += 1;
        }
        None
    }
}

/// All permutations of S_n with the default bound on n.
pub fn permutations(n: usize) -> Result<Permutations> {
    permutations_bounded(n, DEFAULT_MAX_PARTICLES)
}

pub fn permutations_bounded(n: usize, max: usize) -> Result<Permutations> {
    if n == 0 || n > max {
        return Err(Error::TooManyParticles { n, max });
    }
    Ok(Permutations {
        current: (0..n).collect(),
        counters: vec![0; n],
        index: 1,
        started: false,
    })
}

/// Bijection from the points of an unordered configuration (by canonical
/// index) to particle labels: `ν(p) = label`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Numbering(pub Permutation);

impl Numbering {
    pub fn identity(n: usize) -> Self {
        Self(Permutation::identity(n))
    }

    /// Label assigned to canonical point `p`.
    #[inline]
    pub fn label(&self, p: usize) -> usize {
        self.0.image(p)
    }

    /// Canonical point carrying `label`.
    pub fn point_of(&self, label: usize) -> usize {
        self.0.images().iter().position(|&l| l == label).unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.lehmer_rank()
    }

    pub fn from_rank(n: usize, rank: usize) -> Self {
        Self(Permutation::from_lehmer_rank(n, rank))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sign_examples() {
        assert_eq!(Permutation::identity(4).sign(), 1);
        for (a, b) in [(0, 1), (1, 3), (0, 2)] {
            assert_eq!(Permutation::transposition(4, a, b).sign(), -1);
        }
        assert_eq!(Permutation::cycle(3, &[0, 1, 2]).unwrap().sign(), 1);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(permutations(1).unwrap().count(), 1);
        let all: HashSet<_> = permutations(3).unwrap().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(permutations(3).unwrap().count(), 6);
        let all: HashSet<_> = permutations(5).unwrap().collect();
        assert_eq!(all.len(), 120);
        assert!(matches!(
            permutations(9),
            Err(Error::TooManyParticles { n: 9, max: 8 })
        ));
        assert!(permutations_bounded(9, 9).is_ok());
    }

    #[test]
    fn sign_is_multiplicative_exhaustive() {
        for n in 1..=4 {
            let all: Vec<_> = permutations(n).unwrap().collect();
            for s in &all {
                for t in &all {
                    assert_eq!(s.compose(t).unwrap().sign(), s.sign() * t.sign());
                }
            }
        }
    }

    #[test]
    fn lehmer_round_trip() {
        for p in permutations(4).unwrap() {
            let r = p.lehmer_rank();
            assert!(r < 24);
            assert_eq!(Permutation::from_lehmer_rank(4, r), p);
        }
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(Permutation::from_images(vec![0, 0]).is_err());
        assert!(Permutation::from_images(vec![0, 2]).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        for p in permutations(4).unwrap() {
            assert!(p.compose(&p.inverse()).unwrap().is_identity());
        }
    }
}
