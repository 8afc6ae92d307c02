use serde::{Deserialize, Serialize};

use super::taylor::series_coefficients;
use super::{factorial, kubo_n_point};
use crate::error::{Error, Result};
use crate::gibbs::{perturb, GibbsState};
use crate::speccalc::HermitianOperator;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central n-th difference `Σ_k (-1)^k C(n,k) f((n/2 - k)h) / hⁿ`.
pub fn central_difference<F>(f: &mut F, n: usize, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut acc = 0.0;
    for k in 0..=n {
        let x = (n as f64 / 2.0 - k as f64) * h;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, k) * f(x)?;
    }
    Ok(acc / h.powi(n as i32))
}

/// Two levels of Richardson extrapolation on steps `h, h/2, h/4`; central
/// stencils have an even error expansion, so the levels cancel `h²` and
/// `h⁴`.
pub fn richardson<F>(f: &mut F, n: usize, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let d1 = central_difference(f, n, h)?;
    let d2 = central_difference(f, n, h / 2.0)?;
    let d3 = central_difference(f, n, h / 4.0)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

/// Base step: one twentieth of the convergence radius `2ε(1-β)/‖V‖_ε`.
pub fn default_step(state: &GibbsState, v: &HermitianOperator, eps: f64) -> Result<f64> {
    let vn = state.frame().eps_norm(v, eps)?;
    if vn == 0.0 {
        return Ok(0.05);
    }
    Ok(0.05 * 2.0 * eps * (1.0 - state.beta()) / vn)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrechetCheck {
    pub n: usize,
    pub step: f64,
    /// Closed-form Kubo function with every direction equal to `V`.
    pub kubo: f64,
    /// Richardson-extrapolated n-th derivative of `λ ↦ log Tr e^{-(H+λV)}`.
    pub fd: f64,
    /// `(-1)ⁿ`.
    pub sign: f64,
    /// `(n-1)!`, the simplex-volume factor linking the derivative to `kubo`.
    pub multiplicity: f64,
    /// `|fd - sign · multiplicity · kubo|`.
    pub residual: f64,
    /// `n! cₙ` from the exact moment-to-cumulant series; matches `fd` for
    /// every order, including `n ≥ 4` where the Kubo identity stops holding.
    pub series_derivative: f64,
    pub centered: bool,
}

impl FrechetCheck {
    /// `residual ≤ 10⁻⁶ (1 + |predicted|)`.
    pub fn identity_holds(&self) -> bool {
        let predicted = self.sign * self.multiplicity * self.kubo;
        self.residual <= 1e-6 * (1.0 + predicted.abs())
    }
}

/// Compares finite-difference derivatives of the free energy along `V` with
/// the Kubo function. The free energy is taken before the `≥ I` shift of
/// each perturbed state, so it is a smooth function of λ. Every stencil
/// point goes through [`perturb`] and must stay inside the hood.
pub fn frechet_check(
    state: &GibbsState,
    v: &HermitianOperator,
    n: usize,
    h: f64,
    eps: f64,
) -> Result<FrechetCheck> {
    if n == 0 || n > 6 {
        return Err(Error::Input(format!("derivative order {n} outside 1..=6")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("step {h} must be positive")));
    }
    let mut f = |lambda: f64| -> Result<f64> {
        if lambda == 0.0 {
            return Ok(state.psi());
        }
        Ok(perturb(state, &v.scaled(lambda), eps)?.unshifted_free_energy())
    };
    let fd = richardson(&mut f, n, h)?;
    let kubo = kubo_n_point(state, &vec![v.clone(); n])?.value;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let multiplicity = factorial(n - 1);
    let coeffs = series_coefficients(state, v, n)?;
    let mean = state.expectation(v);
    Ok(FrechetCheck {
        n,
        step: h,
        kubo,
        fd,
        sign,
        multiplicity,
        residual: (fd - sign * multiplicity * kubo).abs(),
        series_derivative: factorial(n) * coeffs[n],
        centered: mean.abs() <= 1e-10 * (1.0 + v.op_norm()),
    })
}
