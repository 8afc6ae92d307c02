//! Seeded random operators used by tests, the harness and the demo.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::speccalc::{CMatrix, HermitianOperator};

/// Hermitian matrix with standard-normal real and imaginary parts,
/// symmetrized.
pub fn gaussian_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianOperator::from_hermitian_unchecked(m)
}

/// Real symmetric Gaussian matrix.
pub fn gaussian_real_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let m = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), 0.0));
    HermitianOperator::from_hermitian_unchecked(m)
}

/// `G G† / dim` for a complex Gaussian `G`.
pub fn gaussian_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianOperator::from_hermitian_unchecked(&g * g.adjoint() / Complex64::new(dim as f64, 0.0))
}

/// Diagonal matrix with standard-normal entries.
pub fn gaussian_diagonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let d: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    HermitianOperator::from_real_diagonal(&d).expect("finite diagonal")
}

/// Gaussian Hermitian matrix with zero diagonal.
pub fn gaussian_offdiagonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let mut m = gaussian_hermitian(rng, dim).entries().clone();
    for i in 0..dim {
        m[(i, i)] = Complex64::new(0.0, 0.0);
    }
    HermitianOperator::from_hermitian_unchecked(m)
}

/// Pauli σₓ.
pub fn pauli_x() -> HermitianOperator {
    HermitianOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("finite")
}
