//! Hermitian spectral calculus.
//!
//! Every matrix function in the crate (fractional powers of a Hamiltonian,
//! its resolvent, `exp`, `log`) is evaluated by diagonalising once and
//! lifting a scalar map through the eigenbasis.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value of an arbitrary square complex matrix, taken as
/// the square root of the top eigenvalue of the Gram matrix `A†A`.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v)).max(0.0).sqrt()
}

/// Sum of singular values of an arbitrary square complex matrix.
pub fn trace_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().sum()
}

pub(crate) fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A d×d Hermitian matrix. Construction symmetrizes `(A + A†)/2` and keeps
/// the Frobenius size of the removed anti-Hermitian part.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
    symmetrization_residual: f64,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Input(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::Input("dimension must be at least 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        let adj = entries.adjoint();
        let symmetrization_residual = (&entries - &adj).norm() * 0.5;
        let entries = (&entries + adj) * real(0.5);
        Ok(Self {
            entries,
            symmetrization_residual,
        })
    }

    /// Internal constructor for matrices that are Hermitian by construction.
    pub(crate) fn from_hermitian_unchecked(entries: CMatrix) -> Self {
        let entries = (&entries + entries.adjoint()) * real(0.5);
        Self {
            entries,
            symmetrization_residual: 0.0,
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                real(diag[i])
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Builds from a row-major real matrix.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Input("ragged or non-square real matrix".into()));
        }
        Self::new(CMatrix::from_fn(d, d, |i, j| real(rows[i][j])))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_hermitian_unchecked(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_hermitian_unchecked(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn symmetrization_residual(&self) -> f64 {
        self.symmetrization_residual
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_hermitian_unchecked(&self.entries * real(c))
    }

    /// `A + cI`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.entries.clone();
        for i in 0..self.dim() {
            m[(i, i)] += real(c);
        }
        Self::from_hermitian_unchecked(m)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Operator norm (largest absolute eigenvalue).
    pub fn op_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    pub fn decompose(&self) -> Result<SpectralDecomposition> {
        decompose(self)
    }

    /// Difference in operator norm.
    pub fn distance(&self, other: &Self) -> f64 {
        spectral_norm(&(&self.entries - &other.entries))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.entries)
    }

    /// Loads from the exchange format; rejects matrices whose anti-Hermitian
    /// part exceeds round-off size.
    pub fn from_json(m: &MatrixJson) -> Result<Self> {
        let a = Self::new(m.to_matrix()?)?;
        let scale = 1.0 + a.entries.norm();
        if a.symmetrization_residual > 1e-8 * scale {
            return Err(Error::Input(format!(
                "matrix is not Hermitian (anti-Hermitian part {:.3e})",
                a.symmetrization_residual
            )));
        }
        Ok(a)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianOperator::from_hermitian_unchecked(&self.entries + &rhs.entries)
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HermitianOperator::from_hermitian_unchecked(&self.entries - &rhs.entries)
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scaled(-1.0)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

pub fn decompose(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let eig = a.entries.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite spectrum".into()));
    }
    let d = a.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `U diag(values) U†` for arbitrary real values on the spectrum.
    pub fn lift(&self, values: &[f64]) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (c, &v) in values.iter().enumerate() {
            scaled.column_mut(c).scale_mut(v);
        }
        scaled * u.adjoint()
    }

    /// `U† A U`: expresses `a` in this eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// Decomposition of `A + cI`: same eigenvectors, shifted spectrum.
    pub fn shifted(&self, c: f64) -> SpectralDecomposition {
        SpectralDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|v| v + c).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_unchecked(self.lift(&self.eigenvalues))
    }

    /// Exact functional calculus on the computed spectrum.
    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F) -> Result<HermitianOperator> {
        self.apply_named("f", f)
    }

    pub fn apply_named<F: Fn(f64) -> f64>(&self, name: &str, f: F) -> Result<HermitianOperator> {
        let values = self.map_spectrum(name, f)?;
        Ok(HermitianOperator::from_hermitian_unchecked(self.lift(&values)))
    }

    pub(crate) fn map_spectrum<F: Fn(f64) -> f64>(&self, name: &str, f: F) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&x| {
                let y = f(x);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Domain {
                        function: name.to_string(),
                        eigenvalue: x,
                    })
                }
            })
            .collect()
    }

    /// `A^t`; negative or fractional `t` need a nonnegative (positive for
    /// `t < 0`) spectrum.
    pub fn power(&self, t: f64) -> Result<HermitianOperator> {
        let name = format!("x^{t}");
        if t.fract() != 0.0 || t < 0.0 {
            if let Some(&x) = self.eigenvalues.iter().find(|&&x| x < 0.0 || (t < 0.0 && x == 0.0)) {
                return Err(Error::Domain {
                    function: name,
                    eigenvalue: x,
                });
            }
        }
        self.apply_named(&name, |x| x.powf(t))
    }

    pub fn exp(&self) -> Result<HermitianOperator> {
        self.apply_named("exp", f64::exp)
    }

    pub fn log(&self) -> Result<HermitianOperator> {
        if let Some(&x) = self.eigenvalues.iter().find(|&&x| x <= 0.0) {
            return Err(Error::Domain {
                function: "log".into(),
                eigenvalue: x,
            });
        }
        self.apply_named("log", f64::ln)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    Operator,
    Trace,
    /// `Σ λᵢ^p` for positive semidefinite input, `p ∈ (0, 1]`.
    Schatten(f64),
}

pub fn norm(a: &HermitianOperator, kind: NormKind) -> Result<f64> {
    let spec = decompose(a)?;
    let ev = spec.eigenvalues();
    match kind {
        NormKind::Operator => Ok(ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()))),
        NormKind::Trace => Ok(ev.iter().map(|v| v.abs()).sum()),
        NormKind::Schatten(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Input(format!("Schatten exponent {p} outside (0, 1]")));
            }
            let scale = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
            if let Some(&x) = ev.iter().find(|&&x| x < -tol) {
                return Err(Error::Domain {
                    function: format!("schatten({p})"),
                    eigenvalue: x,
                });
            }
            Ok(ev.iter().map(|&x| x.max(0.0).powf(p)).sum())
        }
    }
}

/// Matrix exchange format: row-major real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        Self {
            dim: d,
            re: (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Input(format!("matrix arrays do not match dim {d}")));
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}
