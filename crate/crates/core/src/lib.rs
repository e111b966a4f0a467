//! Numerical laboratory for compact group extensions of expanding circle maps:
//! equilibrium states, twisted transfer operators, Dolgopyat-type contraction
//! checks, symbolic accessibility and correlation decay on suspension flows.

pub mod accessibility;
pub mod compact_group;
pub mod correlation;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod quadrature;
pub mod symbolic_model;
pub mod thermo;
pub mod transfer;

pub use error::{Error, Result};
