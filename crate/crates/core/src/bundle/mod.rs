//! The bundle over unordered configuration space whose fiber at q is the
//! orthogonal sum of one spinor space per numbering of the points of q.

mod fiber;
mod phi;
mod symmetry;
mod transport;

pub use fiber::{lift, lift_jets, restrict, BundleSection, FiberElement};
pub use phi::{
    phi_schrodinger_residual, phi_schrodinger_terms, phi_velocity, transform_norm_check, NormCheck,
    SchrodingerTerms,
};
pub use symmetry::{
    mixed_species_subbundle_check, permutation_representation, project_boson, project_fermion, ExchangeGroup,
    SubbundleCheck,
};
pub use transport::{holonomy_scalar, holonomy_sign, holonomy_sign_test, parallel_transport, PathInNRd};
