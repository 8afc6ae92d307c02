//! Gibbs states `ρ = e^{-(H+Ψ)}` with `H ≥ I`, their free energy, the
//! regularized mean `ρ·X`, centered scores and hood membership.

use serde::{Deserialize, Serialize};

use crate::epsnorms::ResolventFrame;
use crate::error::{Error, Result};
use crate::speccalc::{HermitianOperator, MatrixJson, SpectralDecomposition};

pub const DEFAULT_BETA: f64 = 0.5;

/// Default λ-grid for [`reg_mean`].
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Clone, Debug)]
pub struct GibbsState {
    h: HermitianOperator,
    frame: ResolventFrame,
    psi: f64,
    beta: f64,
    shift_applied: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Input(format!("beta {beta} outside (0, 1)")));
    }
    Ok(())
}

fn log_sum_exp_neg(h: &[f64]) -> f64 {
    let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
    -lo + h.iter().map(|x| (-(x - lo)).exp()).sum::<f64>().ln()
}

impl GibbsState {
    /// Shifts `h_raw` by the minimal `c ≥ 0` making it `≥ I` and normalizes.
    fn build(h_raw: HermitianOperator, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let spec = h_raw.decompose()?;
        let shift = (1.0 - spec.min_eigenvalue()).max(0.0);
        let (h, spec) = if shift > 0.0 {
            (h_raw.shifted(shift), spec.shifted(shift))
        } else {
            (h_raw, spec)
        };
        let psi = log_sum_exp_neg(spec.eigenvalues());
        Ok(Self {
            frame: ResolventFrame::from_decomposition(spec)?,
            h,
            psi,
            beta,
            shift_applied: shift,
        })
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.h
    }

    pub fn frame(&self) -> &ResolventFrame {
        &self.frame
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        self.frame.spectrum()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn shift_applied(&self) -> f64 {
        self.shift_applied
    }

    /// `log Tr e^{-H_raw}` for the Hamiltonian handed to the constructor,
    /// i.e. the free energy with the stabilizing shift added back.
    pub fn unshifted_free_energy(&self) -> f64 {
        self.psi + self.shift_applied
    }

    /// `log pᵢ = -(hᵢ + Ψ)`, ascending in `hᵢ`.
    pub fn log_rho_eigenvalues(&self) -> Vec<f64> {
        self.spectrum().eigenvalues().iter().map(|h| -(h + self.psi)).collect()
    }

    pub fn rho_eigenvalues(&self) -> Vec<f64> {
        self.log_rho_eigenvalues().into_iter().map(f64::exp).collect()
    }

    /// `ρ^t` as a Hermitian matrix.
    pub fn rho_power(&self, t: f64) -> HermitianOperator {
        let v: Vec<f64> = self.log_rho_eigenvalues().iter().map(|l| (t * l).exp()).collect();
        HermitianOperator::from_hermitian_unchecked(self.spectrum().lift(&v))
    }

    pub fn rho(&self) -> HermitianOperator {
        self.rho_power(1.0)
    }

    /// `Tr ρ^β` for the state's own tag β.
    pub fn tagged_trace(&self) -> f64 {
        self.log_rho_eigenvalues().iter().map(|l| (self.beta * l).exp()).sum()
    }

    /// `Tr ρX`, evaluated in the eigenbasis of ρ.
    pub fn expectation(&self, x: &HermitianOperator) -> f64 {
        let w = self.spectrum().to_eigenbasis(x.entries());
        self.rho_eigenvalues()
            .iter()
            .enumerate()
            .map(|(i, p)| p * w[(i, i)].re)
            .sum()
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            h: self.h.to_json(),
            psi: self.psi,
            beta: self.beta,
            shift_applied: self.shift_applied,
            rho_eigenvalues: self.rho_eigenvalues(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateSnapshot {
    #[serde(rename = "H")]
    pub h: MatrixJson,
    pub psi: f64,
    pub beta: f64,
    pub shift_applied: f64,
    pub rho_eigenvalues: Vec<f64>,
}

pub fn make_state(h_raw: &HermitianOperator, beta: f64) -> Result<GibbsState> {
    GibbsState::build(h_raw.clone(), beta)
}

/// Schatten tag after a perturbation with relative bound `a`: `β/(1-a)`.
pub fn beta_update(beta0: f64, a: f64) -> Result<f64> {
    check_beta(beta0)?;
    if !(a >= 0.0) {
        return Err(Error::Input(format!("relative bound {a} must be nonnegative")));
    }
    if a >= 1.0 - beta0 {
        return Err(Error::BetaOverflow { beta0, a });
    }
    Ok(beta0 / (1.0 - a))
}

pub fn free_energy(state: &GibbsState) -> f64 {
    state.psi
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoodCheck {
    pub ok: bool,
    pub margin: f64,
}

/// `margin = (1 - β) - ‖X‖_ε` relative to the state's Hamiltonian.
pub fn in_hood(state: &GibbsState, x: &HermitianOperator, eps: f64) -> Result<HoodCheck> {
    let margin = (1.0 - state.beta) - state.frame.eps_norm(x, eps)?;
    Ok(HoodCheck {
        ok: margin > 0.0,
        margin,
    })
}

/// The state generated by `H + X`, with the tag updated through the
/// form-bound surrogate of `X`.
pub fn perturb(state: &GibbsState, x: &HermitianOperator, eps: f64) -> Result<GibbsState> {
    perturb_representative(state, x, x, eps)
}

/// Like [`perturb`] for `x`, with hood membership and the tag update taken
/// from `witness`, which must differ from `x` by a multiple of the identity.
/// Both generate the same density matrix.
pub fn perturb_representative(
    state: &GibbsState,
    x: &HermitianOperator,
    witness: &HermitianOperator,
    eps: f64,
) -> Result<GibbsState> {
    if x.dim() != state.dim() || witness.dim() != state.dim() {
        return Err(Error::Input("perturbation dimension mismatch".into()));
    }
    if !std::ptr::eq(x, witness) {
        let diff = x - witness;
        let c = diff.trace() / diff.dim() as f64;
        let off = diff.shifted(-c).op_norm();
        if off > 1e-12 * (1.0 + x.op_norm() + witness.op_norm()) {
            return Err(Error::Input(format!(
                "witness is not gauge-equivalent (residual {off:.3e})"
            )));
        }
    }
    let hood = in_hood(state, witness, eps)?;
    if !hood.ok {
        return Err(Error::OutOfHood {
            margin: hood.margin,
        });
    }
    let a = state.frame.sandwich_norm(witness, 0.5, 0.5);
    let beta = beta_update(state.beta, a)?;
    GibbsState::build(&state.h + x, beta)
}

/// The state generated by `H + X` without any hood check, keeping the tag.
/// Used where a route through several hoods reaches a state whose total
/// perturbation lies outside the first hood.
pub fn combine_unchecked(state: &GibbsState, x: &HermitianOperator) -> Result<GibbsState> {
    GibbsState::build(&state.h + x, state.beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegMean {
    pub mean: f64,
    pub spread: f64,
}

impl RegMean {
    pub fn lambda_independent(&self) -> bool {
        self.spread <= 1e-10 * (1.0 + self.mean.abs())
    }
}

/// `Tr(ρ^λ X ρ^{1-λ})` at λ = 1/2 (the mean) and its spread over the grid,
/// evaluated with dense matrix products.
pub fn reg_mean(state: &GibbsState, x: &HermitianOperator, lambda_grid: &[f64]) -> Result<RegMean> {
    if lambda_grid.is_empty() {
        return Err(Error::Input("empty lambda grid".into()));
    }
    if let Some(l) = lambda_grid.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Input(format!("lambda {l} outside (0, 1)")));
    }
    let at = |l: f64| {
        let m = state.rho_power(l).entries() * x.entries() * state.rho_power(1.0 - l).entries();
        m.trace().re
    };
    let mean = at(0.5);
    let vals: Vec<f64> = lambda_grid.iter().map(|&l| at(l)).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RegMean {
        mean,
        spread: hi - lo,
    })
}

/// The score `X - (ρ·X) I`.
pub fn center(state: &GibbsState, x: &HermitianOperator) -> HermitianOperator {
    x.shifted(-state.expectation(x))
}
