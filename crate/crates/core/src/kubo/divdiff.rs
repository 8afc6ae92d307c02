//! Divided differences of the exponential, `exp[x₁,…,xₙ]`.
//!
//! Nodes are sorted and the divided-difference table is filled over
//! contiguous node ranges. A range whose spread is at most
//! [`SERIES_SPREAD`] is evaluated directly from the power series
//!
//! ```text
//! exp[z₁,…,zₘ] = e^c Σ_k h_k(z - c) / (k + m - 1)!
//! ```
//!
//! where `h_k` is the complete homogeneous symmetric polynomial and `c` the
//! midpoint of the range. Wider ranges use the usual recursion, whose
//! denominator is then at least `SERIES_SPREAD`, so coincident and
//! near-coincident nodes never reach a small divisor.

/// Ranges narrower than this are summed as a series.
pub const SERIES_SPREAD: f64 = 1.0;

const MAX_SERIES_TERMS: usize = 64;

fn series(nodes: &[f64]) -> f64 {
    let m = nodes.len();
    let lo = nodes[0];
    let hi = nodes[m - 1];
    let c = 0.5 * (lo + hi);
    // h[k] = h_k(z₁..z_j) after j variables have been folded in.
    let mut h = [0.0_f64; MAX_SERIES_TERMS];
    h[0] = 1.0;
    let r = 0.5 * (hi - lo);
    for &x in nodes {
        let t = x - c;
        for k in 1..MAX_SERIES_TERMS {
            h[k] += t * h[k - 1];
        }
    }
    // 1/(m-1)!
    let mut inv_fact = 1.0;
    for j in 1..m {
        inv_fact /= j as f64;
    }
    let first = inv_fact;
    let mut sum = 0.0;
    // |h_k| / (k+m-1)! ≤ r^k / (k! (m-1)!), which also bounds the tail.
    let mut bound = first;
    for (k, hk) in h.iter().enumerate() {
        if k > 0 {
            inv_fact /= (k + m - 1) as f64;
            bound *= r / k as f64;
        }
        sum += hk * inv_fact;
        if bound <= 1e-18 * sum.abs() {
            break;
        }
    }
    c.exp() * sum
}

/// The confluent divided difference `exp[x₁,…,xₙ]`, i.e. the integral of
/// `exp(Σ αⱼxⱼ)` over the standard simplex `{α ≥ 0, Σα = 1}` with respect
/// to `dα₁⋯dα_{n-1}`.
///
/// Panics on an empty node list.
pub fn divdiff_exp(nodes: &[f64]) -> f64 {
    assert!(!nodes.is_empty(), "divided difference needs at least one node");
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    divdiff_exp_sorted(&x)
}

/// [`divdiff_exp`] for nodes already in ascending order.
pub fn divdiff_exp_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n == 1 {
        return x[0].exp();
    }
    if x[n - 1] - x[0] <= SERIES_SPREAD {
        return series(x);
    }
    // row[i] holds exp[x_i .. x_{i+len-1}] for the current length.
    let mut row: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    for len in 2..=n {
        for i in 0..=(n - len) {
            let j = i + len - 1;
            let w = x[j] - x[i];
            row[i] = if w <= SERIES_SPREAD {
                series(&x[i..=j])
            } else {
                (row[i + 1] - row[i]) / w
            };
        }
    }
    row[0]
}
