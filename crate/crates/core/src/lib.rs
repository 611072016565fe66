//! Numerical laboratory for group-invariant states on matrix algebras:
//! Wigner fixed-point sets, Haar averaging, crossed products by finite
//! groups, entropies, and fields of invariant states over base points.

pub mod bundle;
pub mod crossed;
pub mod entropy;
pub mod error;
pub mod groups;
pub mod matrix;
pub mod rng;
pub mod states;
pub mod wigner;

pub use error::{Error, Result};
