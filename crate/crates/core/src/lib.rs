//! Finite-dimensional laboratory for ε-bounded perturbations of a
//! Hamiltonian `H₀ ≥ I`: the ε-norm scale, perturbed Gibbs states and the
//! charts and affine structures they carry, and the Kubo n-point functions
//! that control the Taylor expansion of the free energy.

pub mod epsnorms;
pub mod error;
pub mod gibbs;
pub mod kubo;
pub mod manifold;
pub mod sampling;
pub mod speccalc;

pub use error::{Error, Result};
pub use gibbs::GibbsState;
pub use speccalc::{HermitianOperator, MatrixJson, NormKind, SpectralDecomposition};
