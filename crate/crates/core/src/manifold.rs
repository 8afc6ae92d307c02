//! Charts on the manifold of perturbed Gibbs states, the two affine
//! structures, parallel transport and route independence.
//!
//! A chart point is a base state together with a centered score. States are
//! recovered by perturbing the base with the score, using the original
//! representative for the hood check, since the two generate the same
//! density matrix but differ in ε-norm by a multiple of `‖R‖`.

use serde::{Deserialize, Serialize};

use crate::epsnorms::{equivalence_from_frames, EquivalenceConstants};
use crate::error::{Error, Result};
use crate::gibbs::{center, combine_unchecked, in_hood, perturb, perturb_representative, GibbsState};
use crate::speccalc::{HermitianOperator, MatrixJson};

/// Trace and positivity slack for density-matrix inputs.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ChartPoint {
    base: GibbsState,
    score: HermitianOperator,
    representative: HermitianOperator,
    epsilon: f64,
}

impl ChartPoint {
    pub fn base(&self) -> &GibbsState {
        &self.base
    }

    pub fn score(&self) -> &HermitianOperator {
        &self.score
    }

    /// The perturbation the point was built from; differs from the score by
    /// a multiple of the identity.
    pub fn representative(&self) -> &HermitianOperator {
        &self.representative
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The state `ρ_X` generated by the score.
    pub fn state(&self) -> Result<GibbsState> {
        perturb_representative(&self.base, &self.score, &self.representative, self.epsilon)
    }

    pub fn score_json(&self) -> MatrixJson {
        self.score.to_json()
    }
}

fn require_hood(state: &GibbsState, x: &HermitianOperator, eps: f64) -> Result<()> {
    let h = in_hood(state, x, eps)?;
    if h.ok {
        Ok(())
    } else {
        Err(Error::OutOfHood { margin: h.margin })
    }
}

pub fn to_chart(base: &GibbsState, x: &HermitianOperator, eps: f64) -> Result<ChartPoint> {
    if x.dim() != base.dim() {
        return Err(Error::Input("perturbation dimension mismatch".into()));
    }
    require_hood(base, x, eps)?;
    Ok(ChartPoint {
        base: base.clone(),
        score: center(base, x),
        representative: x.clone(),
        epsilon: eps,
    })
}

/// Operator-norm distance between the density matrices of two states.
pub fn rho_distance(a: &GibbsState, b: &GibbsState) -> f64 {
    a.rho().distance(&b.rho())
}

/// The state generated by `λX + (1-λ)Y`.
pub fn plus_mixture(
    base: &GibbsState,
    x: &HermitianOperator,
    y: &HermitianOperator,
    lam: f64,
    eps: f64,
) -> Result<GibbsState> {
    check_lambda(lam)?;
    require_hood(base, x, eps)?;
    require_hood(base, y, eps)?;
    let z = &(x * lam) + &(y * (1.0 - lam));
    perturb(base, &z, eps)
}

fn check_lambda(lam: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Input(format!("mixing weight {lam} outside [0, 1]")));
    }
    Ok(())
}

fn check_density(rho: &HermitianOperator, which: &str) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > DENSITY_TOL {
        return Err(Error::Input(format!("{which} has trace {tr}, expected 1")));
    }
    let lo = rho.decompose()?.min_eigenvalue();
    if lo < -DENSITY_TOL {
        return Err(Error::Input(format!("{which} has negative eigenvalue {lo}")));
    }
    Ok(())
}

/// `λρ₁ + (1-λ)ρ₂`.
pub fn minus_mixture(rho1: &HermitianOperator, rho2: &HermitianOperator, lam: f64) -> Result<HermitianOperator> {
    check_lambda(lam)?;
    if rho1.dim() != rho2.dim() {
        return Err(Error::Input("density matrices differ in dimension".into()));
    }
    check_density(rho1, "rho1")?;
    check_density(rho2, "rho2")?;
    Ok(&(rho1 * lam) + &(rho2 * (1.0 - lam)))
}

/// Operator-norm distance between the two mixtures of `ρ_X` and `ρ_Y`.
pub fn mixture_gap(
    base: &GibbsState,
    x: &HermitianOperator,
    y: &HermitianOperator,
    lam: f64,
    eps: f64,
) -> Result<f64> {
    let plus = plus_mixture(base, x, y, lam, eps)?.rho();
    let r1 = perturb(base, x, eps)?.rho();
    let r2 = perturb(base, y, eps)?.rho();
    Ok(plus.distance(&minus_mixture(&r1, &r2, lam)?))
}

/// Moves a score at `src` to the score hyperplane of `dst`. The
/// representative line `{Z + αI}` is the same in every chart, so only the
/// destination enters.
pub fn transport(z: &HermitianOperator, _src: &GibbsState, dst: &GibbsState) -> HermitianOperator {
    center(dst, z)
}

#[derive(Clone, Debug)]
pub struct ChartTransition {
    /// `None` when `X + Y` lies outside the base hood.
    pub coord_in_0: Option<ChartPoint>,
    pub coord_in_x: ChartPoint,
    pub constants: EquivalenceConstants,
    /// `‖Y‖_ε(H_X) / ‖Y‖_ε(H₀)`, 1 for `Y = 0`.
    pub norm_ratio: f64,
    /// Distance between `ρ_{X+Y}` read off the two charts.
    pub rho_deviation: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionSummary {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub norm_ratio: f64,
    pub in_bracket: bool,
    pub deviations: Vec<f64>,
}

impl ChartTransition {
    pub fn in_bracket(&self) -> bool {
        self.constants.brackets(self.norm_ratio, 1e-9)
    }

    pub fn summary(&self) -> TransitionSummary {
        TransitionSummary {
            m: self.constants.m,
            big_m: self.constants.big_m,
            norm_ratio: self.norm_ratio,
            in_bracket: self.in_bracket(),
            deviations: self.rho_deviation.into_iter().collect(),
        }
    }
}

/// Expresses `ρ_{X+Y}` in the chart at `ρ₀` and in the chart at `ρ_X`.
pub fn chart_transition(
    base0: &GibbsState,
    x: &HermitianOperator,
    y: &HermitianOperator,
    eps: f64,
) -> Result<ChartTransition> {
    let sx = perturb(base0, x, eps)?;
    let coord_in_x = to_chart(&sx, y, eps)?;
    let reached = coord_in_x.state()?;

    let total = x + y;
    let coord_in_0 = if in_hood(base0, &total, eps)?.ok {
        Some(to_chart(base0, &total, eps)?)
    } else {
        None
    };
    let rho_deviation = match &coord_in_0 {
        Some(c) => Some(rho_distance(&c.state()?, &reached)),
        None => None,
    };

    let n0 = base0.frame().eps_norm(y, eps)?;
    let nx = sx.frame().eps_norm(y, eps)?;
    let norm_ratio = if n0 == 0.0 { 1.0 } else { nx / n0 };
    Ok(ChartTransition {
        coord_in_0,
        coord_in_x,
        constants: equivalence_from_frames(base0.frame(), sx.frame(), eps),
        norm_ratio,
        rho_deviation,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteReport {
    /// Largest operator-norm gap between the sequential state after step k
    /// and the single-shot state of the k-th partial sum.
    pub max_rho_deviation: f64,
    pub steps: usize,
    /// Schatten tags along the route, starting with the base.
    pub betas: Vec<f64>,
}

/// Walks the parts one hood at a time, re-centering each part in the newest
/// chart, and compares against adding the partial sums to the base at once.
pub fn route_independence(base: &GibbsState, parts: &[HermitianOperator], eps: f64) -> Result<RouteReport> {
    let mut state = base.clone();
    let mut partial = HermitianOperator::zeros(base.dim());
    let mut betas = vec![base.beta()];
    let mut worst = 0.0_f64;
    for (i, p) in parts.iter().enumerate() {
        let hood = in_hood(&state, p, eps)?;
        if !hood.ok {
            return Err(Error::Precondition(format!(
                "route step {i}: in_hood violated (margin {:.3e})",
                hood.margin
            )));
        }
        state = perturb_representative(&state, &center(&state, p), p, eps)?;
        betas.push(state.beta());
        partial = &partial + p;
        let single = combine_unchecked(base, &partial)?;
        worst = worst.max(rho_distance(&state, &single));
    }
    Ok(RouteReport {
        max_rho_deviation: worst,
        steps: parts.len(),
        betas,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityProbe {
    pub lambdas: Vec<f64>,
    /// Hood margin at `ρ₀` of `λX + (1-λ)Y`.
    pub mixture_margins: Vec<f64>,
    /// Every mixture margin is at least the smaller endpoint margin.
    pub hood_convex: bool,
    /// Hood margin at `ρ_X` of the mixture exponent seen from that chart,
    /// `λX + (1-λ)Y - X`; whether every mixture is covered by one of the two
    /// charts.
    pub second_chart_margins: Vec<f64>,
    pub covered: bool,
}

/// Reported experiment: (+1)-mixtures of two states, one in each of two
/// overlapping charts.
pub fn convexity_probe(
    base: &GibbsState,
    x: &HermitianOperator,
    y: &HermitianOperator,
    lambdas: &[f64],
    eps: f64,
) -> Result<ConvexityProbe> {
    let mx = in_hood(base, x, eps)?.margin;
    let my = in_hood(base, y, eps)?.margin;
    let sx = perturb(base, x, eps)?;
    let mut mixture_margins = Vec::with_capacity(lambdas.len());
    let mut second = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        check_lambda(l)?;
        let z = &(x * l) + &(y * (1.0 - l));
        mixture_margins.push(in_hood(base, &z, eps)?.margin);
        second.push(in_hood(&sx, &(&z - x), eps)?.margin);
    }
    let floor = mx.min(my) - 1e-12;
    let hood_convex = mx <= 0.0 || my <= 0.0 || mixture_margins.iter().all(|&m| m >= floor);
    let covered = mixture_margins
        .iter()
        .zip(&second)
        .all(|(&a, &b)| a > 0.0 || b > 0.0);
    Ok(ConvexityProbe {
        lambdas: lambdas.to_vec(),
        mixture_margins,
        hood_convex,
        second_chart_margins: second,
        covered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{make_state, reg_mean, DEFAULT_LAMBDA_GRID};
    use crate::sampling::{gaussian_hermitian, pauli_x};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(v).unwrap()
    }

    fn linear_state(d: usize) -> GibbsState {
        let h: Vec<f64> = (1..=d).map(|k| k as f64).collect();
        make_state(&diag(&h), 0.5).unwrap()
    }

    fn in_hood_random(rng: &mut ChaCha8Rng, s: &GibbsState, target: f64) -> HermitianOperator {
        let x = gaussian_hermitian(rng, s.dim());
        x.scaled(target / s.frame().eps_norm(&x, 0.25).unwrap())
    }

    #[test]
    fn chart_of_identity_multiple() {
        let s = linear_state(3);
        let c = to_chart(&s, &HermitianOperator::identity(3).scaled(0.1), 0.25).unwrap();
        assert!(c.score().op_norm() < 1e-15);
        assert!(rho_distance(&c.state().unwrap(), &s) < 1e-15);
    }

    #[test]
    fn centered_input_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let s = linear_state(4);
        let x = center(&s, &in_hood_random(&mut rng, &s, 0.2));
        let c = to_chart(&s, &x, 0.25).unwrap();
        assert!(c.score().distance(&x) < 1e-15);
    }

    #[test]
    fn chart_recovers_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let s = linear_state(6);
        let x = in_hood_random(&mut rng, &s, 0.4);
        let c = to_chart(&s, &x, 0.25).unwrap();
        let m = reg_mean(&s, c.score(), &DEFAULT_LAMBDA_GRID).unwrap().mean;
        assert!(m.abs() < 1e-10);
        let direct = perturb(&s, &x, 0.25).unwrap();
        assert!(rho_distance(&c.state().unwrap(), &direct) < 1e-11);
        assert!(matches!(
            to_chart(&s, &x.scaled(2.0), 0.25),
            Err(Error::OutOfHood { .. })
        ));
    }

    #[test]
    fn plus_mixture_endpoints_and_diagonal() {
        let s = linear_state(3);
        let x = diag(&[0.1, -0.2, 0.05]);
        let y = diag(&[-0.1, 0.1, 0.2]);
        let a = plus_mixture(&s, &x, &y, 1.0, 0.25).unwrap();
        assert!(rho_distance(&a, &perturb(&s, &x, 0.25).unwrap()) < 1e-15);
        let b = plus_mixture(&s, &x, &y, 0.0, 0.25).unwrap();
        assert!(rho_distance(&b, &perturb(&s, &y, 0.25).unwrap()) < 1e-15);
        let l = 0.3;
        let m = plus_mixture(&s, &x, &y, l, 0.25).unwrap();
        let w: Vec<f64> = (0..3)
            .map(|k| {
                let e = (k + 1) as f64 + l * x.entries()[(k, k)].re + (1.0 - l) * y.entries()[(k, k)].re;
                (-e).exp()
            })
            .collect();
        let z: f64 = w.iter().sum();
        let rho = m.rho();
        for k in 0..3 {
            assert!((rho.entries()[(k, k)].re - w[k] / z).abs() < 1e-15);
        }
    }

    #[test]
    fn minus_mixture_cases() {
        let s = linear_state(2);
        let r1 = s.rho();
        let r2 = perturb(&s, &pauli_x().scaled(0.3), 0.25).unwrap().rho();
        assert!(minus_mixture(&r1, &r2, 1.0).unwrap().distance(&r1) < 1e-16);
        assert!(minus_mixture(&r1, &r1, 0.37).unwrap().distance(&r1) < 1e-15);
        let m = minus_mixture(&r1, &r2, 0.5).unwrap();
        assert!((m.trace() - 1.0).abs() < 1e-14);
        assert!(minus_mixture(&diag(&[0.5, 0.6]), &r1, 0.5).is_err());
        assert!(minus_mixture(&diag(&[1.5, -0.5]), &r1, 0.5).is_err());

        let gap = mixture_gap(&s, &HermitianOperator::zeros(2), &pauli_x().scaled(0.3), 0.5, 0.25).unwrap();
        assert!(gap > 1e-6);
    }

    #[test]
    fn transport_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let a = linear_state(4);
        let b = perturb(&a, &in_hood_random(&mut rng, &a, 0.3), 0.25).unwrap();
        let c = perturb(&b, &in_hood_random(&mut rng, &b, 0.2), 0.25).unwrap();
        let z1 = gaussian_hermitian(&mut rng, 4);
        let z2 = gaussian_hermitian(&mut rng, 4);
        assert_eq!(transport(&HermitianOperator::zeros(4), &a, &b).op_norm(), 0.0);
        let two = transport(&transport(&z1, &a, &b), &b, &c);
        assert!(two.distance(&transport(&z1, &a, &c)) < 1e-14);
        let l = 0.35;
        let mixed = transport(&(&(&z1 * l) + &(&z2 * (1.0 - l))), &a, &b);
        let sep = &(&transport(&z1, &a, &b) * l) + &(&transport(&z2, &a, &b) * (1.0 - l));
        assert!(mixed.distance(&sep) < 1e-14);
        assert!(b.expectation(&transport(&z1, &a, &b)).abs() < 1e-14);
    }

    #[test]
    fn transition_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let s = linear_state(6);
        let x = in_hood_random(&mut rng, &s, 0.3);
        let t = chart_transition(&s, &x, &HermitianOperator::zeros(6), 0.25).unwrap();
        assert!(t.coord_in_x.score().op_norm() < 1e-15);
        assert_eq!(t.norm_ratio, 1.0);
        assert!(rho_distance(&t.coord_in_x.state().unwrap(), &perturb(&s, &x, 0.25).unwrap()) < 1e-15);

        let y = in_hood_random(&mut rng, &s, 0.1);
        let t = chart_transition(&s, &HermitianOperator::zeros(6), &y, 0.25).unwrap();
        assert!((t.norm_ratio - 1.0).abs() < 1e-12);
        assert!((t.constants.m - 1.0).abs() < 1e-12 && (t.constants.big_m - 1.0).abs() < 1e-12);

        let t = chart_transition(&s, &x, &y, 0.25).unwrap();
        assert!(t.in_bracket(), "{:?}", t.summary());
        assert!(t.rho_deviation.unwrap() < 1e-11);
        let j = serde_json::to_value(t.summary()).unwrap();
        assert!(j.get("M").is_some() && j.get("deviations").is_some());
    }

    #[test]
    fn routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let s = linear_state(6);
        let x = in_hood_random(&mut rng, &s, 0.3);
        let half = x.scaled(0.5);
        let r = route_independence(&s, &[half.clone(), half], 0.25).unwrap();
        assert!(r.max_rho_deviation <= 1e-11);
        let r = route_independence(&s, &[x.clone(), -&x], 0.25).unwrap();
        assert!(r.max_rho_deviation <= 1e-11);
        assert_eq!(r.betas.len(), 3);

        let parts: Vec<_> = (0..3).map(|_| in_hood_random(&mut rng, &s, 0.12)).collect();
        let r = route_independence(&s, &parts, 0.25).unwrap();
        assert!(r.max_rho_deviation <= 1e-11);

        let err = route_independence(&s, &[x.scaled(0.5), x.scaled(5.0)], 0.25).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("step 1") && msg.contains("in_hood"), "{msg}");
    }

    #[test]
    fn convexity_probe_on_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let s = linear_state(5);
        let x = in_hood_random(&mut rng, &s, 0.3);
        let y = in_hood_random(&mut rng, &s, 0.4);
        let p = convexity_probe(&s, &x, &y, &[0.0, 0.25, 0.5, 0.75, 1.0], 0.25).unwrap();
        assert!(p.hood_convex && p.covered);
    }
}
