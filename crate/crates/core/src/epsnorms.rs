//! The ε-norm family `‖X‖_ε = ‖R^{1/2+ε} X R^{1/2-ε}‖` with `R = H⁻¹`, its
//! endpoints (the form-bound surrogate at ε = 0 and `‖XR‖` at the top of
//! the scale), and the constants that make ε-norms taken relative to two
//! comparable Hamiltonians equivalent.
//!
//! Sandwiched products are not Hermitian, so every norm here is a largest
//! singular value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::speccalc::{spectral_norm, CMatrix, HermitianOperator, SpectralDecomposition};

/// Smallest eigenvalue accepted for a reference Hamiltonian.
pub const MIN_EIGENVALUE_TOL: f64 = 1e-12;

/// Relative slack allowed when checking monotonicity in ε.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Eleven equispaced points covering `[0, 1/2]`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.05).collect()
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::Input(format!("epsilon {eps} outside [0, 1/2]")));
    }
    Ok(())
}

/// A Hamiltonian `H ≥ I` together with its spectral decomposition; all
/// resolvent powers are taken from this one decomposition.
#[derive(Clone, Debug)]
pub struct ResolventFrame {
    spectrum: SpectralDecomposition,
}

impl ResolventFrame {
    pub fn new(h: &HermitianOperator) -> Result<Self> {
        Self::from_decomposition(h.decompose()?)
    }

    pub fn from_decomposition(spectrum: SpectralDecomposition) -> Result<Self> {
        let lo = spectrum.min_eigenvalue();
        if lo < 1.0 - MIN_EIGENVALUE_TOL {
            return Err(Error::Precondition(format!(
                "reference Hamiltonian must satisfy H >= I, smallest eigenvalue is {lo}"
            )));
        }
        Ok(Self { spectrum })
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// `H^t` as a dense matrix.
    pub fn power(&self, t: f64) -> CMatrix {
        let v: Vec<f64> = self.spectrum.eigenvalues().iter().map(|h| h.powf(t)).collect();
        self.spectrum.lift(&v)
    }

    /// `‖R^left X R^right‖`, evaluated in the eigenbasis of `H`.
    pub fn sandwich_norm(&self, x: &HermitianOperator, left: f64, right: f64) -> f64 {
        let w = self.spectrum.to_eigenbasis(x.entries());
        let h = self.spectrum.eigenvalues();
        let m = CMatrix::from_fn(w.nrows(), w.ncols(), |i, j| {
            w[(i, j)] * (h[i].powf(-left) * h[j].powf(-right))
        });
        spectral_norm(&m)
    }

    pub fn eps_norm(&self, x: &HermitianOperator, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.sandwich_norm(x, 0.5 + eps, 0.5 - eps))
    }

    /// `‖X R‖`.
    pub fn omega_norm(&self, x: &HermitianOperator) -> f64 {
        self.sandwich_norm(x, 0.0, 1.0)
    }
}

pub fn eps_norm(x: &HermitianOperator, h: &HermitianOperator, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    ResolventFrame::new(h)?.eps_norm(x, eps)
}

pub fn omega_norm(x: &HermitianOperator, h: &HermitianOperator) -> Result<f64> {
    Ok(ResolventFrame::new(h)?.omega_norm(x))
}

/// Computable upper bound `‖R^{1/2} X R^{1/2}‖` on the relative form bound
/// of `X` with respect to `H`.
///
/// In finite dimension the true infimum is always 0 (every bounded `X` is
/// form-bounded with `a = 0`, `b = ‖X‖`), so this surrogate is what the
/// library uses wherever a relative bound enters, e.g. the Schatten tag
/// update `β' = β / (1 - a)`.
pub fn form_bound_surrogate(x: &HermitianOperator, h: &HermitianOperator) -> Result<f64> {
    eps_norm(x, h, 0.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsNormReport {
    pub epsilon_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub omega_norm: f64,
    pub form_bound_surrogate: f64,
    /// Nondecreasing in ε within [`MONOTONE_SLACK`].
    pub monotone: bool,
    /// Largest relative decrease between consecutive grid points (0 if none).
    pub max_relative_drop: f64,
    /// Every grid value lies in `[‖X‖₀, ‖XR‖]` within the same slack.
    pub bracketed_by_endpoints: bool,
}

pub fn monotonicity_scan(
    x: &HermitianOperator,
    h: &HermitianOperator,
    grid: &[f64],
) -> Result<EpsNormReport> {
    if grid.is_empty() {
        return Err(Error::Input("empty epsilon grid".into()));
    }
    for &e in grid {
        check_eps(e)?;
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("epsilon grid must be ascending".into()));
    }
    let frame = ResolventFrame::new(h)?;
    let values: Vec<f64> = grid
        .iter()
        .map(|&e| frame.sandwich_norm(x, 0.5 + e, 0.5 - e))
        .collect();
    let omega = frame.omega_norm(x);
    let surrogate = if grid[0] == 0.0 {
        values[0]
    } else {
        frame.sandwich_norm(x, 0.5, 0.5)
    };

    let mut max_drop = 0.0_f64;
    for w in values.windows(2) {
        if w[1] < w[0] {
            let scale = w[1].abs().max(f64::MIN_POSITIVE);
            max_drop = max_drop.max((w[0] - w[1]) / scale);
        }
    }
    let slack = |v: f64| MONOTONE_SLACK * v.abs().max(f64::MIN_POSITIVE);
    let bracketed = values
        .iter()
        .all(|&v| v + slack(v) >= surrogate && v <= omega + slack(omega));

    Ok(EpsNormReport {
        epsilon_grid: grid.to_vec(),
        values,
        omega_norm: omega,
        form_bound_surrogate: surrogate,
        monotone: max_drop <= MONOTONE_SLACK,
        max_relative_drop: max_drop,
        bracketed_by_endpoints: bracketed,
    })
}

/// Constants with `m ‖Y‖_ε(H₀) ≤ ‖Y‖_ε(H_X) ≤ M ‖Y‖_ε(H₀)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EquivalenceConstants {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

impl EquivalenceConstants {
    pub fn brackets(&self, ratio: f64, rel_slack: f64) -> bool {
        ratio >= self.m * (1.0 - rel_slack) && ratio <= self.big_m * (1.0 + rel_slack)
    }
}

/// `M = ‖R_X^{a} H₀^{a}‖ · ‖H₀^{b} R_X^{b}‖` with `a = 1/2+ε`, `b = 1/2-ε`;
/// `1/m` is the same product with the two Hamiltonians swapped.
pub fn equivalence_constants(
    h0: &HermitianOperator,
    hx: &HermitianOperator,
    eps: f64,
) -> Result<EquivalenceConstants> {
    check_eps(eps)?;
    let f0 = ResolventFrame::new(h0)?;
    let fx = ResolventFrame::new(hx)?;
    Ok(equivalence_from_frames(&f0, &fx, eps))
}

pub(crate) fn equivalence_from_frames(
    f0: &ResolventFrame,
    fx: &ResolventFrame,
    eps: f64,
) -> EquivalenceConstants {
    let (a, b) = (0.5 + eps, 0.5 - eps);
    let big_m = spectral_norm(&(fx.power(-a) * f0.power(a)))
        * spectral_norm(&(f0.power(b) * fx.power(-b)));
    let m_inv = spectral_norm(&(f0.power(-a) * fx.power(a)))
        * spectral_norm(&(fx.power(b) * f0.power(-b)));
    EquivalenceConstants {
        m: 1.0 / m_inv,
        big_m,
    }
}

/// Tolerance for the inverse identities between fractional-power factors.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparabilityReport {
    /// `[‖H₀^{a}R_X^{a}‖, ‖H₀^{b}R_X^{b}‖, ‖H_X^{a}R₀^{a}‖, ‖H_X^{b}R₀^{b}‖]`
    /// with `a = 1/2+ε`, `b = 1/2-ε`.
    pub factor_norms: [f64; 4],
    pub products_are_identity: bool,
    pub max_identity_residual: f64,
    /// `‖H_X - H₀‖_ε` measured against `H₀`.
    pub difference_eps_norm: f64,
    /// Whether the difference is small enough (`< 1`) for the
    /// bounded-inverse branch to apply.
    pub small_difference: bool,
}

pub fn comparability_check(
    h0: &HermitianOperator,
    hx: &HermitianOperator,
    eps: f64,
) -> Result<ComparabilityReport> {
    check_eps(eps)?;
    let f0 = ResolventFrame::new(h0)?;
    let fx = ResolventFrame::new(hx)?;
    let d = h0.dim();
    let ident = CMatrix::identity(d, d);
    let mut norms = [0.0; 4];
    let mut worst = 0.0_f64;
    for (k, t) in [0.5 + eps, 0.5 - eps].into_iter().enumerate() {
        let h0_rx = f0.power(t) * fx.power(-t);
        let hx_r0 = fx.power(t) * f0.power(-t);
        norms[k] = spectral_norm(&h0_rx);
        norms[k + 2] = spectral_norm(&hx_r0);
        worst = worst
            .max(spectral_norm(&(&hx_r0 * &h0_rx - &ident)))
            .max(spectral_norm(&(&h0_rx * &hx_r0 - &ident)));
    }
    let diff = hx - h0;
    let diff_norm = f0.eps_norm(&diff, eps)?;
    Ok(ComparabilityReport {
        factor_norms: norms,
        products_are_identity: worst <= IDENTITY_TOL,
        max_identity_residual: worst,
        difference_eps_norm: diff_norm,
        small_difference: diff_norm < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_hermitian, gaussian_psd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(v).unwrap()
    }

    fn random_h(rng: &mut ChaCha8Rng, d: usize) -> HermitianOperator {
        gaussian_psd(rng, d).shifted(1.0)
    }

    #[test]
    fn norm_of_h_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_h(&mut rng, 5);
        for e in [0.0, 0.1, 0.25, 0.5] {
            assert!((eps_norm(&h, &h, e).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((omega_norm(&h, &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_closed_form() {
        let h = diag(&[1.0, 2.0]);
        let x = diag(&[3.0, -4.0]);
        for e in [0.0, 0.25, 0.5] {
            assert!((eps_norm(&x, &h, e).unwrap() - 3.0).abs() < 1e-14);
        }
        assert!((omega_norm(&x, &h).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eps_zero_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_h(&mut rng, 6);
        let x = gaussian_hermitian(&mut rng, 6);
        let r_half = h.decompose().unwrap().power(-0.5).unwrap();
        let direct = spectral_norm(&(r_half.entries() * x.entries() * r_half.entries()));
        assert!((eps_norm(&x, &h, 0.0).unwrap() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn omega_dominates_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_h(&mut rng, 6);
        let x = gaussian_hermitian(&mut rng, 6);
        let om = omega_norm(&x, &h).unwrap();
        for e in default_eps_grid() {
            assert!(eps_norm(&x, &h, e).unwrap() <= om * (1.0 + 1e-12));
        }
    }

    #[test]
    fn surrogate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_h(&mut rng, 6);
        assert_eq!(form_bound_surrogate(&HermitianOperator::zeros(6), &h).unwrap(), 0.0);
        assert!((form_bound_surrogate(&h.scaled(0.5), &h).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn surrogate_bounds_the_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_h(&mut rng, 6);
        let x = gaussian_hermitian(&mut rng, 6);
        let a = form_bound_surrogate(&x, &h).unwrap();
        for _ in 0..1000 {
            let psi = nalgebra::DVector::from_fn(6, |_, _| {
                num_complex::Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let psi = &psi / num_complex::Complex64::new(psi.norm(), 0.0);
            let qx = (psi.adjoint() * x.entries() * &psi)[(0, 0)].re;
            let qh = (psi.adjoint() * h.entries() * &psi)[(0, 0)].re;
            assert!(qx.abs() <= a * qh + 1e-10);
        }
    }

    #[test]
    fn scan_of_h_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_h(&mut rng, 4);
        let rep = monotonicity_scan(&h, &h, &default_eps_grid()).unwrap();
        assert!(rep.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(rep.monotone);
    }

    #[test]
    fn scan_commuting_is_constant() {
        let rep = monotonicity_scan(&diag(&[0.5, -3.0, 1.0]), &diag(&[1.0, 2.0, 4.0]), &default_eps_grid())
            .unwrap();
        assert!(rep.values.iter().all(|v| (v - 1.5).abs() < 1e-14));
        assert_eq!(rep.form_bound_surrogate, rep.values[0]);
    }

    #[test]
    fn scan_random_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_h(&mut rng, 6);
        let x = gaussian_hermitian(&mut rng, 6);
        let rep = monotonicity_scan(&x, &h, &default_eps_grid()).unwrap();
        assert!(rep.monotone, "drop {}", rep.max_relative_drop);
        assert!(rep.bracketed_by_endpoints);
    }

    #[test]
    fn scan_rejects_bad_grids() {
        let h = diag(&[1.0, 2.0]);
        assert!(matches!(monotonicity_scan(&h, &h, &[]), Err(Error::Input(_))));
        assert!(monotonicity_scan(&h, &h, &[0.3, 0.1]).is_err());
        assert!(monotonicity_scan(&h, &h, &[0.6]).is_err());
    }

    #[test]
    fn preconditions() {
        let x = diag(&[1.0, 1.0]);
        assert!(matches!(
            eps_norm(&x, &diag(&[0.5, 2.0]), 0.1),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(eps_norm(&x, &diag(&[1.0, 2.0]), 0.7), Err(Error::Input(_))));
    }

    #[test]
    fn adjoint_exponent_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_h(&mut rng, 5);
        let x = gaussian_hermitian(&mut rng, 5);
        let f = ResolventFrame::new(&h).unwrap();
        for d in [0.1, 0.3, 0.45] {
            let a = f.sandwich_norm(&x, d, 1.0 - d);
            let b = f.sandwich_norm(&x, 1.0 - d, d);
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn equivalence_identical_and_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random_h(&mut rng, 4);
        let c = equivalence_constants(&h, &h, 0.2).unwrap();
        assert!((c.m - 1.0).abs() < 1e-12 && (c.big_m - 1.0).abs() < 1e-12);

        let c = equivalence_constants(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.5]), 0.25).unwrap();
        assert!((c.big_m - 1.0).abs() < 1e-14);
        assert!((c.m - 0.8).abs() < 1e-14);
    }

    #[test]
    fn comparability_commuting() {
        let rep = comparability_check(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.5]), 0.25).unwrap();
        let want = [1.0, 1.0, 1.25_f64.powf(0.75), 1.25_f64.powf(0.25)];
        for (g, w) in rep.factor_norms.iter().zip(want) {
            assert!((g - w).abs() < 1e-13, "{g} vs {w}");
        }
        assert!(rep.products_are_identity);
        assert!(rep.small_difference);
    }

    #[test]
    fn comparability_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = random_h(&mut rng, 5);
        let rep = comparability_check(&h, &h, 0.1).unwrap();
        assert!(rep.factor_norms.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(rep.max_identity_residual < 1e-12);
    }
}
