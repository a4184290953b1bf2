//! Points, labeled and unordered configurations, permutations and numberings.

mod configuration;
mod permutation;
mod species;

pub use configuration::{canonicalize, LabeledConfiguration, UnorderedConfiguration};
pub use permutation::{
    factorial, permutations, permutations_bounded, Numbering, Permutation, Permutations,
    DEFAULT_MAX_PARTICLES,
};
pub use species::{Species, SpeciesTable, Statistics};
