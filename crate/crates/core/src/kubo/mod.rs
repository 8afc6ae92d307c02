//! Kubo n-point functions of a Gibbs state and the machinery around them.
//!
//! The n-point function of directions `V₁…Vₙ` is
//!
//! ```text
//! K(V₁,…,Vₙ) = ∫_Δ Tr[ρ^{α₁} V₁ ρ^{α₂} V₂ ⋯ ρ^{αₙ} Vₙ] dα₁⋯dα_{n-1},
//! ```
//!
//! the integral running over the simplex `α ≥ 0, Σα = 1` with its Lebesgue
//! measure (volume `1/(n-1)!`). In the eigenbasis of ρ every term is an
//! exponential of `Σ αⱼ log p_{iⱼ}`, so the integral collapses onto divided
//! differences of `exp` at the log-populations.
//!
//! With this normalization the free energy `Ψ(λ) = log Tr e^{-(H+λV)}`
//! satisfies `Ψ⁽ⁿ⁾(0) = (-1)ⁿ (n-1)! K(V,…,V)` for `n ≤ 3` and centered `V`;
//! from `n = 4` on the derivative is a cumulant and picks up products of
//! lower-order functions.

mod bounds;
mod derivative;
mod divdiff;
mod oracle;
mod taylor;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::GibbsState;
use crate::speccalc::{CMatrix, HermitianOperator, MatrixJson};

pub use bounds::{delta_ladder, estimate_chain, BoundLedger, FactorRecord, PrintedBoundTerms};
pub use derivative::{central_difference, default_step, frechet_check, richardson, FrechetCheck};
pub use divdiff::{divdiff_exp, divdiff_exp_sorted, SERIES_SPREAD};
pub use oracle::{
    kubo_oracle, kubo_quadrature, simplex_mc, OracleEstimate, DEFAULT_QUADRATURE_DEGREE,
};
pub use taylor::{taylor_probe, TaylorProbe};

/// Largest `dⁿ` enumerated by [`kubo_n_point`] unless overridden.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Terms whose running matrix-element product falls below this fraction of
/// the largest attainable product are skipped.
pub const PRUNE_RELATIVE: f64 = 1e-16;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KuboResult {
    pub n: usize,
    /// Real part of the closed-form value.
    pub value: f64,
    /// Imaginary part; zero up to rounding for n ≤ 2 or repeated directions.
    pub imag: f64,
    pub oracle_value: Option<f64>,
    pub oracle_stderr: Option<f64>,
    pub directions: Vec<MatrixJson>,
}

impl KuboResult {
    pub fn with_oracle(mut self, est: &OracleEstimate) -> Self {
        self.oracle_value = Some(est.value);
        self.oracle_stderr = Some(est.stderr);
        self
    }

    /// `|value - oracle| ≤ max(5σ, 10⁻⁶(1+|value|))`; `None` without an
    /// oracle run.
    pub fn oracle_agrees(&self) -> Option<bool> {
        let (o, s) = (self.oracle_value?, self.oracle_stderr?);
        let tol = (5.0 * s).max(1e-6 * (1.0 + self.value.abs()));
        Some((self.value - o).abs() <= tol)
    }

    pub fn modulus(&self) -> f64 {
        self.value.hypot(self.imag)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Directions expressed in the eigenbasis of the state.
pub(crate) fn eigenbasis_directions(state: &GibbsState, dirs: &[HermitianOperator]) -> Result<Vec<CMatrix>> {
    dirs.iter()
        .map(|v| {
            if v.dim() != state.dim() {
                Err(Error::Input(format!(
                    "direction has dimension {}, state has {}",
                    v.dim(),
                    state.dim()
                )))
            } else {
                Ok(state.spectrum().to_eigenbasis(v.entries()))
            }
        })
        .collect()
}

pub fn kubo_n_point(state: &GibbsState, directions: &[HermitianOperator]) -> Result<KuboResult> {
    kubo_n_point_with_cap(state, directions, DEFAULT_ENUMERATION_CAP)
}

/// Closed-form Kubo function: the sum over index cycles
/// `(V₁)_{i₁i₂}(V₂)_{i₂i₃}⋯(Vₙ)_{iₙi₁} · exp[log p_{i₁},…,log p_{iₙ}]`.
pub fn kubo_n_point_with_cap(
    state: &GibbsState,
    directions: &[HermitianOperator],
    cap: u64,
) -> Result<KuboResult> {
    let n = directions.len();
    if n == 0 {
        return Err(Error::Input("Kubo function needs at least one direction".into()));
    }
    let d = state.dim();
    let work = (d as f64).powi(n as i32);
    if work > cap as f64 {
        return Err(Error::Resource(format!(
            "d^n = {d}^{n} exceeds the enumeration cap {cap}; use the Monte-Carlo oracle instead"
        )));
    }
    let w = eigenbasis_directions(state, directions)?;
    let logp = state.log_rho_eigenvalues();
    let value = CycleSum::new(&w, &logp).total();
    Ok(KuboResult {
        n,
        value: value.re,
        imag: value.im,
        oracle_value: None,
        oracle_stderr: None,
        directions: directions.iter().map(|v| v.to_json()).collect(),
    })
}

/// Depth-first enumeration of index cycles with divided differences cached
/// per node multiset.
struct CycleSum<'a> {
    w: &'a [CMatrix],
    logp: &'a [f64],
    cutoff: f64,
    cache: HashMap<Vec<u8>, f64>,
    path: Vec<usize>,
}

impl<'a> CycleSum<'a> {
    fn new(w: &'a [CMatrix], logp: &'a [f64]) -> Self {
        let largest: f64 = w
            .iter()
            .map(|m| m.iter().fold(0.0_f64, |a, z| a.max(z.norm())))
            .product();
        Self {
            w,
            logp,
            cutoff: PRUNE_RELATIVE * largest,
            cache: HashMap::new(),
            path: Vec::with_capacity(w.len()),
        }
    }

    fn total(mut self) -> Complex64 {
        let d = self.logp.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            self.path.push(i);
            acc += self.descend(Complex64::new(1.0, 0.0));
            self.path.pop();
        }
        acc
    }

    fn descend(&mut self, running: Complex64) -> Complex64 {
        let n = self.w.len();
        let depth = self.path.len();
        let last = self.path[depth - 1];
        if depth == n {
            let first = self.path[0];
            let prod = running * self.w[n - 1][(last, first)];
            if prod.norm() <= self.cutoff {
                return Complex64::new(0.0, 0.0);
            }
            return prod * self.kernel();
        }
        let d = self.logp.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for next in 0..d {
            let prod = running * self.w[depth - 1][(last, next)];
            if prod.norm() <= self.cutoff {
                continue;
            }
            self.path.push(next);
            acc += self.descend(prod);
            self.path.pop();
        }
        acc
    }

    fn kernel(&mut self) -> f64 {
        let mut key: Vec<u8> = self.path.iter().map(|&i| i as u8).collect();
        key.sort_unstable();
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        let nodes: Vec<f64> = key.iter().map(|&i| self.logp[i as usize]).collect();
        let v = divdiff_exp(&nodes);
        self.cache.insert(key, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{make_state, reg_mean, DEFAULT_LAMBDA_GRID};
    use crate::sampling::{gaussian_diagonal, gaussian_hermitian, gaussian_psd, pauli_x};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(v).unwrap()
    }

    #[test]
    fn one_point_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = make_state(&gaussian_psd(&mut rng, 5), 0.5).unwrap();
        let v = gaussian_hermitian(&mut rng, 5);
        let k = kubo_n_point(&s, std::slice::from_ref(&v)).unwrap();
        let m = reg_mean(&s, &v, &DEFAULT_LAMBDA_GRID).unwrap().mean;
        assert!((k.value - m).abs() < 1e-12);
    }

    #[test]
    fn two_level_sigma_x() {
        let s = make_state(&diag(&[1.0, 2.0]), 0.5).unwrap();
        let x = pauli_x();
        let k = kubo_n_point(&s, &[x.clone(), x]).unwrap();
        let p = 1.0 / (1.0 + (-1.0_f64).exp());
        assert!((k.value - 2.0 * (2.0 * p - 1.0)).abs() < 1e-14);
        assert!((k.value - 0.924_234).abs() < 1e-6);
        assert!(k.imag.abs() < 1e-15);
    }

    #[test]
    fn commuting_two_point_is_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = make_state(&gaussian_diagonal(&mut rng, 4).shifted(3.0), 0.5).unwrap();
        let v = gaussian_diagonal(&mut rng, 4);
        let k = kubo_n_point(&s, &[v.clone(), v.clone()]).unwrap();
        let v2 = HermitianOperator::new(v.entries() * v.entries()).unwrap();
        assert!((k.value - s.expectation(&v2)).abs() < 1e-14);
    }

    #[test]
    fn cyclic_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = make_state(&gaussian_psd(&mut rng, 4).scaled(2.0), 0.5).unwrap();
        let v: Vec<_> = (0..3).map(|_| gaussian_hermitian(&mut rng, 4)).collect();
        let a = kubo_n_point(&s, &v).unwrap();
        let b = kubo_n_point(&s, &[v[1].clone(), v[2].clone(), v[0].clone()]).unwrap();
        assert!((a.value - b.value).abs() <= 1e-10 * a.modulus());
        assert!((a.imag - b.imag).abs() <= 1e-10 * a.modulus());
    }

    #[test]
    fn cap_is_enforced() {
        let s = make_state(&diag(&[1.0, 2.0, 3.0]), 0.5).unwrap();
        let v = vec![diag(&[1.0, 0.0, 0.0]); 5];
        assert!(matches!(
            kubo_n_point_with_cap(&s, &v, 100),
            Err(Error::Resource(_))
        ));
        assert!(kubo_n_point(&s, &[]).is_err());
    }
}
