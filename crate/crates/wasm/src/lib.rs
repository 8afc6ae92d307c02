//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string. Errors come
//! back as `{"error": "..."}` so the page has a single decoding path.

use qim_core::epsnorms::monotonicity_scan;
use qim_core::gibbs::{center, make_state, GibbsState};
use qim_core::kubo::{kubo_n_point, kubo_oracle, taylor_probe};
use qim_core::sampling::gaussian_hermitian;
use qim_core::HermitianOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_DIM: usize = 16;

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn check_dim(dim: usize) -> Result<(), String> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(format!("dimension {dim} outside 1..={MAX_DIM}"))
    }
}

/// `h_k = 1 + k^power` for k = 0..dim-1.
fn power_spectrum(dim: usize, power: f64) -> Result<HermitianOperator, String> {
    let d: Vec<f64> = (0..dim).map(|k| 1.0 + (k as f64).powf(power)).collect();
    HermitianOperator::from_real_diagonal(&d).map_err(|e| e.to_string())
}

fn state(dim: usize, power: f64, beta: f64) -> Result<GibbsState, String> {
    make_state(&power_spectrum(dim, power)?, beta).map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct EpsCurve {
    pub epsilon: Vec<f64>,
    pub values: Vec<f64>,
    pub omega_norm: f64,
    pub form_bound: f64,
    pub monotone: bool,
}

pub fn eps_curve(dim: usize, power: f64, seed: u64, points: usize) -> Result<EpsCurve, String> {
    check_dim(dim)?;
    if !(2..=400).contains(&points) {
        return Err(format!("points {points} outside 2..=400"));
    }
    let h = power_spectrum(dim, power)?;
    let x = gaussian_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), dim);
    // Stop just short of 1/2, where the ε-norm equals the ω-norm.
    let grid: Vec<f64> = (0..points).map(|i| 0.499 * i as f64 / (points - 1) as f64).collect();
    let r = monotonicity_scan(&x, &h, &grid).map_err(|e| e.to_string())?;
    Ok(EpsCurve {
        epsilon: r.epsilon_grid,
        values: r.values,
        omega_norm: r.omega_norm,
        form_bound: r.form_bound_surrogate,
        monotone: r.monotone,
    })
}

#[derive(Serialize)]
pub struct TaylorCurve {
    pub lambda: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// `errors[i][k] = |partial sum to order k - direct|` at `lambda[i]`.
    pub errors: Vec<Vec<f64>>,
    pub radius_bound: f64,
}

pub fn taylor_curve(dim: usize, beta: f64, epsilon: f64, seed: u64, order: usize) -> Result<TaylorCurve, String> {
    check_dim(dim)?;
    let s = state(dim, 1.0, beta)?;
    let v = center(&s, &gaussian_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), dim));
    let n = s.frame().eps_norm(&v, epsilon).map_err(|e| e.to_string())?;
    if n == 0.0 {
        return Err("perturbation vanishes after centering".into());
    }
    // λ = 1 sits at ε-norm ε(1-β), inside the neighbourhood.
    let v = v.scaled(epsilon * (1.0 - beta) / n);
    let lambda = [0.25, 0.5, 0.75, 1.0];
    let p = taylor_probe(&s, &v, &lambda, order, epsilon).map_err(|e| e.to_string())?;
    Ok(TaylorCurve {
        errors: (0..lambda.len()).map(|i| p.errors(i)).collect(),
        lambda: p.lambda_grid,
        coefficients: p.coeffs,
        radius_bound: p.radius_bound,
    })
}

#[derive(Serialize)]
pub struct KuboComparison {
    pub n: usize,
    pub value: f64,
    pub imag: f64,
    pub monte_carlo: f64,
    pub stderr: f64,
    pub samples: usize,
    pub agrees: bool,
}

pub fn kubo_compare(dim: usize, n: usize, beta: f64, seed: u64, samples: usize) -> Result<KuboComparison, String> {
    check_dim(dim)?;
    if !(2..=5).contains(&n) {
        return Err(format!("order {n} outside 2..=5"));
    }
    if !(2..=2_000_000).contains(&samples) {
        return Err(format!("samples {samples} outside 2..=2000000"));
    }
    let s = state(dim, 1.0, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<_> = (0..n).map(|_| gaussian_hermitian(&mut rng, dim)).collect();
    let est = kubo_oracle(&s, &dirs, samples, seed).map_err(|e| e.to_string())?;
    let k = kubo_n_point(&s, &dirs).map_err(|e| e.to_string())?.with_oracle(&est);
    Ok(KuboComparison {
        n,
        value: k.value,
        imag: k.imag,
        monte_carlo: est.value,
        stderr: est.stderr,
        samples: est.samples,
        agrees: k.oracle_agrees().unwrap_or(false),
    })
}

/// ε-norm of a seeded random perturbation against `ε ∈ [0, 1/2)`, for
/// `H = diag(1 + k^power)`.
#[wasm_bindgen(js_name = epsNormCurve)]
pub fn eps_norm_curve_js(dim: u32, power: f64, seed: u32, points: u32) -> String {
    to_json(eps_curve(dim as usize, power, seed as u64, points as usize))
}

/// Free-energy Taylor errors along a seeded centered direction.
#[wasm_bindgen(js_name = taylorConvergence)]
pub fn taylor_convergence_js(dim: u32, beta: f64, epsilon: f64, seed: u32, order: u32) -> String {
    to_json(taylor_curve(dim as usize, beta, epsilon, seed as u64, order as usize))
}

/// Closed-form Kubo n-point value against the simplex Monte-Carlo estimate.
#[wasm_bindgen(js_name = kuboVsMonteCarlo)]
pub fn kubo_vs_monte_carlo_js(dim: u32, n: u32, beta: f64, seed: u32, samples: u32) -> String {
    to_json(kubo_compare(dim as usize, n as usize, beta, seed as u64, samples as usize))
}
