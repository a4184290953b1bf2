//! Standard and identity-based Bohmian mechanics on labeled and unordered
//! configuration space.

pub mod bundle;
pub mod config_space;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod wavefunction;

pub use error::{Error, Result};
