//! Independent evaluations of the Kubo integral: Monte Carlo over the
//! simplex and nested Gauss–Legendre quadrature. Neither touches divided
//! differences; both multiply fractional powers of ρ directly.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eigenbasis_directions, factorial};
use crate::error::{Error, Result};
use crate::gibbs::GibbsState;
use crate::speccalc::{CMatrix, HermitianOperator};

const CHUNK: usize = 16_384;

pub const DEFAULT_QUADRATURE_DEGREE: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        if self.count == 0.0 {
            return o;
        }
        let count = self.count + o.count;
        let delta = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * o.count / count,
            m2: self.m2 + o.m2 + delta * delta * self.count * o.count / count,
        }
    }
}

/// Monte-Carlo estimate of `∫_Δ f(α) dα₁⋯dα_{n-1}` over the simplex with
/// `n` barycentric coordinates. Points are drawn by normalizing i.i.d.
/// exponentials. Work is split into fixed chunks, chunk `c` using stream `c`
/// of a ChaCha generator seeded with `seed`, so the result does not depend
/// on thread scheduling.
pub fn simplex_mc<G, F>(n: usize, samples: usize, seed: u64, make_eval: G) -> OracleEstimate
where
    G: Fn() -> F + Sync,
    F: FnMut(&[f64]) -> f64,
{
    assert!(n >= 1 && samples >= 2);
    let chunks = samples.div_ceil(CHUNK);
    let run = |c: usize| -> Moments {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let mut eval = make_eval();
        let count = CHUNK.min(samples - c * CHUNK);
        let mut alpha = vec![0.0; n];
        let mut m = Moments {
            count: 0.0,
            mean: 0.0,
            m2: 0.0,
        };
        for _ in 0..count {
            let mut total = 0.0;
            for a in alpha.iter_mut() {
                *a = rng.sample::<f64, _>(Exp1);
                total += *a;
            }
            for a in alpha.iter_mut() {
                *a /= total;
            }
            let y = eval(&alpha);
            m.count += 1.0;
            let delta = y - m.mean;
            m.mean += delta / m.count;
            m.m2 += delta * (y - m.mean);
        }
        m
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Moments> = (0..chunks).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Moments> = (0..chunks).map(run).collect();

    let total = parts.into_iter().fold(
        Moments {
            count: 0.0,
            mean: 0.0,
            m2: 0.0,
        },
        Moments::merge,
    );
    let volume = 1.0 / factorial(n - 1);
    let var = total.m2 / (total.count - 1.0);
    OracleEstimate {
        value: total.mean * volume,
        stderr: (var / total.count).sqrt() * volume,
        samples,
        seed,
    }
}

/// Real part of `Tr[ρ^{α₁}W₁⋯ρ^{αₙ}Wₙ]` with the `W` already in the
/// eigenbasis of ρ, reusing scratch buffers across calls.
struct TraceProduct<'a> {
    w: &'a [CMatrix],
    logp: &'a [f64],
    cur: Vec<Complex64>,
    next: Vec<Complex64>,
    scale: Vec<f64>,
}

impl<'a> TraceProduct<'a> {
    fn new(w: &'a [CMatrix], logp: &'a [f64]) -> Self {
        let d = logp.len();
        Self {
            w,
            logp,
            cur: vec![Complex64::new(0.0, 0.0); d * d],
            next: vec![Complex64::new(0.0, 0.0); d * d],
            scale: vec![0.0; d],
        }
    }

    fn eval(&mut self, alpha: &[f64]) -> f64 {
        let d = self.logp.len();
        let n = self.w.len();
        for (s, l) in self.scale.iter_mut().zip(self.logp) {
            *s = (alpha[0] * l).exp();
        }
        for i in 0..d {
            for k in 0..d {
                self.cur[i * d + k] = self.w[0][(i, k)] * self.scale[i];
            }
        }
        for j in 1..n {
            for (s, l) in self.scale.iter_mut().zip(self.logp) {
                *s = (alpha[j] * l).exp();
            }
            let wj = &self.w[j];
            if j == n - 1 {
                let mut tr = 0.0;
                for i in 0..d {
                    for m in 0..d {
                        tr += (self.cur[i * d + m] * wj[(m, i)]).re * self.scale[m];
                    }
                }
                return tr;
            }
            for i in 0..d {
                for k in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..d {
                        acc += self.cur[i * d + m] * (wj[(m, k)] * self.scale[m]);
                    }
                    self.next[i * d + k] = acc;
                }
            }
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        // n == 1
        (0..d).map(|i| self.cur[i * d + i].re).sum()
    }
}

/// Monte-Carlo oracle for the real part of the Kubo function.
pub fn kubo_oracle(
    state: &GibbsState,
    directions: &[HermitianOperator],
    samples: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let n = directions.len();
    if n < 2 {
        return Err(Error::Input("the Monte-Carlo oracle needs n >= 2".into()));
    }
    if samples < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let w = eigenbasis_directions(state, directions)?;
    let logp = state.log_rho_eigenvalues();
    Ok(simplex_mc(n, samples, seed, || {
        let mut tp = TraceProduct::new(&w, &logp);
        move |a: &[f64]| tp.eval(a)
    }))
}

/// Nested Gauss–Legendre quadrature of the Kubo integral: `α₁ ∈ [0,1]`,
/// `α₂ ∈ [0, 1-α₁]`, …, with `αₙ` the remainder. Each integrand value is a
/// dense product of fractional powers of ρ in the original basis.
/// Cost grows as `degreeⁿ⁻¹`; intended for `n ≤ 3`.
pub fn kubo_quadrature(
    state: &GibbsState,
    directions: &[HermitianOperator],
    degree: usize,
) -> Result<f64> {
    let n = directions.len();
    if n < 2 {
        return Err(Error::Input("quadrature oracle needs n >= 2".into()));
    }
    let rule = GaussLegendre::new(degree)
        .map_err(|e| Error::Input(format!("invalid quadrature degree {degree}: {e}")))?;
    let pairs = rule.as_node_weight_pairs();
    let integrand = |alpha: &[f64]| -> f64 {
        let mut m = state.rho_power(alpha[0]).entries() * directions[0].entries();
        for j in 1..n {
            m = m * state.rho_power(alpha[j]).entries() * directions[j].entries();
        }
        m.trace().re
    };
    fn nest(
        level: usize,
        n: usize,
        remaining: f64,
        alpha: &mut Vec<f64>,
        pairs: &[(f64, f64)],
        f: &dyn Fn(&[f64]) -> f64,
    ) -> f64 {
        if level == n - 1 {
            alpha.push(remaining.max(0.0));
            let v = f(alpha);
            alpha.pop();
            return v;
        }
        let half = 0.5 * remaining;
        let mut acc = 0.0;
        for &(x, w) in pairs {
            alpha.push(half * (x + 1.0));
            acc += w * nest(level + 1, n, remaining - alpha[level], alpha, pairs, f);
            alpha.pop();
        }
        acc * half
    }
    let mut alpha = Vec::with_capacity(n);
    Ok(nest(0, n, 1.0, &mut alpha, pairs, &integrand))
}
