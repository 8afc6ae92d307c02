use serde::{Deserialize, Serialize};

use super::bounds::closed_form_bound;
use super::{factorial, kubo_n_point};
use crate::error::{Error, Result};
use crate::gibbs::{in_hood, perturb, GibbsState};
use crate::speccalc::HermitianOperator;

pub const MAX_TAYLOR_ORDER: usize = 8;

/// Taylor coefficients `c₀…c_N` of `λ ↦ log Tr e^{-(H+λV)}` at 0.
///
/// `Tr e^{-(H+λV)} / Z = 1 + Σ_k (-1)^k K_k λ^k / k` with `K_k` the Kubo
/// function with all directions `V`; the logarithm of that series is taken
/// term by term.
pub(crate) fn series_coefficients(
    state: &GibbsState,
    v: &HermitianOperator,
    order: usize,
) -> Result<Vec<f64>> {
    let mut moments = vec![0.0; order + 1];
    for (k, m) in moments.iter_mut().enumerate().skip(1) {
        let kk = kubo_n_point(state, &vec![v.clone(); k])?.value;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *m = sign * kk / k as f64;
    }
    let mut c = vec![0.0; order + 1];
    c[0] = state.psi();
    for k in 1..=order {
        let mut acc = k as f64 * moments[k];
        for j in 1..k {
            acc -= j as f64 * c[j] * moments[k - j];
        }
        c[k] = acc / k as f64;
    }
    Ok(c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorProbe {
    pub lambda_grid: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// `partial_sums[i][k] = Σ_{j≤k} c_j λ_i^j`.
    pub partial_sums: Vec<Vec<f64>>,
    /// `log Tr e^{-(H+λV)}` recomputed from the perturbed state.
    pub direct: Vec<f64>,
    /// `2ε(1-β)/‖V‖_ε`.
    pub radius_bound: f64,
    /// Grid points with `|λ| ≤ 0.8·min(1, radius_bound)`, where convergence
    /// is assessed.
    pub checked: Vec<bool>,
    pub converged: bool,
    /// `|c_k| · k! / B_k` with `B_k` the closed-form n-point bound for
    /// directions `V`; reported, not asserted.
    pub envelope_ratios: Vec<f64>,
}

impl TaylorProbe {
    pub fn errors(&self, i: usize) -> Vec<f64> {
        self.partial_sums[i].iter().map(|s| (s - self.direct[i]).abs()).collect()
    }

    /// `|c_k λ^k|` for k = 0..=N.
    pub fn terms(&self, i: usize) -> Vec<f64> {
        let l = self.lambda_grid[i];
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (c * l.powi(k as i32)).abs())
            .collect()
    }

    /// Rows `lambda,order,coefficient,partial_sum,direct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,order,coefficient,partial_sum,direct\n");
        for (i, l) in self.lambda_grid.iter().enumerate() {
            for (k, c) in self.coeffs.iter().enumerate() {
                out.push_str(&format!(
                    "{l:e},{k},{c:e},{:e},{:e}\n",
                    self.partial_sums[i][k], self.direct[i]
                ));
            }
        }
        out
    }
}

/// Error sequence converges if the last partial sum is at round-off level,
/// or the tail (orders ⌈N/2⌉..N) is nonincreasing and shrinks at least by
/// half per order on average.
fn tail_converges(errors: &[f64], floor: f64) -> bool {
    let n = errors.len() - 1;
    if errors[n] <= floor {
        return true;
    }
    let k0 = n.div_ceil(2);
    let nonincreasing = errors[k0..].windows(2).all(|w| w[1] <= w[0] + floor);
    nonincreasing && errors[n] <= errors[k0] * 0.5_f64.powi((n - k0) as i32)
}

pub fn taylor_probe(
    state: &GibbsState,
    v: &HermitianOperator,
    lambda_grid: &[f64],
    max_order: usize,
    eps: f64,
) -> Result<TaylorProbe> {
    if max_order == 0 || max_order > MAX_TAYLOR_ORDER {
        return Err(Error::Input(format!(
            "Taylor order {max_order} outside 1..={MAX_TAYLOR_ORDER}"
        )));
    }
    for &l in lambda_grid {
        let hood = in_hood(state, &v.scaled(l), eps)?;
        if !hood.ok {
            return Err(Error::OutOfHood {
                margin: hood.margin,
            });
        }
    }
    let coeffs = series_coefficients(state, v, max_order)?;
    let vnorm = state.frame().eps_norm(v, eps)?;
    let radius_bound = if vnorm == 0.0 {
        f64::INFINITY
    } else {
        2.0 * eps * (1.0 - state.beta()) / vnorm
    };

    let mut partial_sums = Vec::with_capacity(lambda_grid.len());
    let mut direct = Vec::with_capacity(lambda_grid.len());
    for &l in lambda_grid {
        let mut s = 0.0;
        let mut row = Vec::with_capacity(max_order + 1);
        for (k, c) in coeffs.iter().enumerate() {
            s += c * l.powi(k as i32);
            row.push(s);
        }
        partial_sums.push(row);
        direct.push(if l == 0.0 {
            state.psi()
        } else {
            perturb(state, &v.scaled(l), eps)?.unshifted_free_energy()
        });
    }

    let reach = 0.8 * radius_bound.min(1.0);
    let checked: Vec<bool> = lambda_grid.iter().map(|l| l.abs() <= reach).collect();
    let converged = (0..lambda_grid.len()).filter(|&i| checked[i]).all(|i| {
        let errors: Vec<f64> = partial_sums[i].iter().map(|s| (s - direct[i]).abs()).collect();
        tail_converges(&errors, 1e-12 * (1.0 + direct[i].abs()))
    });

    let vnorms = vec![vnorm; max_order];
    let envelope_ratios = (1..=max_order)
        .map(|k| {
            let b = closed_form_bound(state, &vnorms[..k], eps).total;
            if b == 0.0 {
                0.0
            } else {
                coeffs[k].abs() * factorial(k) / b
            }
        })
        .collect();

    Ok(TaylorProbe {
        lambda_grid: lambda_grid.to_vec(),
        coeffs,
        partial_sums,
        direct,
        radius_bound,
        checked,
        converged,
        envelope_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::make_state;
    use crate::sampling::pauli_x;

    fn two_level() -> GibbsState {
        make_state(&HermitianOperator::from_real_diagonal(&[1.0, 2.0]).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn zero_direction() {
        let s = two_level();
        let p = taylor_probe(&s, &HermitianOperator::zeros(2), &[0.3, -0.5], 5, 0.25).unwrap();
        assert!(p.coeffs[1..].iter().all(|&c| c == 0.0));
        for (row, d) in p.partial_sums.iter().zip(&p.direct) {
            assert!(row.iter().all(|s| (s - d).abs() < 1e-15));
        }
        assert!(p.radius_bound.is_infinite());
        assert!(p.converged);
    }

    #[test]
    fn two_level_sigma_x_converges() {
        let s = two_level();
        let v = pauli_x().scaled(0.1);
        let vn = s.frame().eps_norm(&v, 0.25).unwrap();
        let r = 2.0 * 0.25 * 0.5 / vn;
        let p = taylor_probe(&s, &v, &[0.5 * r], 6, 0.25).unwrap();
        assert!((p.radius_bound - r).abs() < 1e-14);
        let err = (p.partial_sums[0][6] - p.direct[0]).abs();
        assert!(err < 1e-6, "error {err}");
        assert!(p.converged);
        let csv = p.to_csv();
        assert_eq!(csv.lines().count(), 1 + 7);
    }

    #[test]
    fn low_orders_match_known_derivatives() {
        let s = two_level();
        let c = series_coefficients(&s, &pauli_x(), 2).unwrap();
        let p = 1.0 / (1.0 + (-1.0_f64).exp());
        // centered direction: c1 = 0, c2 = BKM variance / 2
        assert!(c[1].abs() < 1e-15);
        assert!((c[2] - (2.0 * p - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = two_level();
        assert!(taylor_probe(&s, &pauli_x(), &[0.1], 9, 0.25).is_err());
        assert!(matches!(
            taylor_probe(&s, &pauli_x(), &[5.0], 4, 0.25),
            Err(Error::OutOfHood { .. })
        ));
    }

    #[test]
    fn tail_rule() {
        assert!(tail_converges(&[1.0, 0.5, 0.2, 0.05, 0.01], 1e-12));
        assert!(!tail_converges(&[1.0, 0.5, 0.4, 0.39, 0.38], 1e-12));
        assert!(tail_converges(&[1.0, 0.5, 1e-13], 1e-12));
    }
}
