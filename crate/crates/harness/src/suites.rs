use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use qim_core::epsnorms::{
    comparability_check, default_eps_grid, equivalence_constants, form_bound_surrogate,
    monotonicity_scan, IDENTITY_TOL, MONOTONE_SLACK,
};
use qim_core::gibbs::{center, make_state, perturb, reg_mean, GibbsState, DEFAULT_LAMBDA_GRID};
use qim_core::kubo::{
    default_step, estimate_chain, frechet_check, kubo_n_point, kubo_oracle, kubo_quadrature,
    taylor_probe, DEFAULT_QUADRATURE_DEGREE,
};
use qim_core::manifold::{
    chart_transition, convexity_probe, mixture_gap, rho_distance, route_independence, to_chart,
    transport,
};
use qim_core::sampling::gaussian_hermitian;
use qim_core::HermitianOperator;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{RunConfig, ALL_SUITES};
use crate::ensemble::{draw, gen_ensemble, rescale, Instance};
use crate::report::{Environment, Observation, Record, Report};
use crate::HarnessError;

type SuiteResult = qim_core::Result<()>;

struct Out<'a> {
    prefix: String,
    anchor: &'a str,
    records: Vec<Record>,
    observations: Vec<Observation>,
}

impl Out<'_> {
    fn check(&mut self, name: &str, margin: f64, tolerance: f64) {
        self.records
            .push(Record::new(format!("{}/{name}", self.prefix), self.anchor, margin, tolerance));
    }

    fn observe(&mut self, name: &str, value: f64) {
        self.observations.push(Observation {
            name: format!("{}/{name}", self.prefix),
            value,
        });
    }
}

fn base_state(cfg: &RunConfig, inst: &Instance) -> qim_core::Result<GibbsState> {
    make_state(&inst.h0, cfg.beta0)
}

/// `min(ratio - m, M - ratio) / M`.
fn bracket_margin(ratio: f64, m: f64, big_m: f64) -> f64 {
    (ratio - m).min(big_m - ratio) / big_m
}

fn lemma2_monotonicity(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let _ = cfg;
    let r = monotonicity_scan(&inst.x, &inst.h0, &default_eps_grid())?;
    // One record: worst of the monotonicity drop and the bracket distance.
    let bracket = r
        .values
        .iter()
        .map(|&v| (v - r.form_bound_surrogate).min(r.omega_norm - v) / r.omega_norm)
        .fold(f64::INFINITY, f64::min);
    out.check("monotone-bracketed", bracket.min(-r.max_relative_drop), MONOTONE_SLACK);
    Ok(())
}

fn quadratic_form(a: &HermitianOperator, psi: &DVector<Complex64>) -> f64 {
    (psi.adjoint() * a.entries() * psi)[(0, 0)].re
}

fn lemma1_formbound(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let _ = cfg;
    let a = form_bound_surrogate(&inst.x, &inst.h0)?;
    let d = inst.h0.dim();
    let mut rng = inst.rng(2);
    let mut worst = f64::INFINITY;
    for _ in 0..64 {
        let psi = DVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qh = quadratic_form(&inst.h0, &psi);
        let qx = quadratic_form(&inst.x, &psi).abs();
        worst = worst.min((a * qh - qx) / (a * qh));
    }
    out.check("form-bound", worst, 1e-12);

    // The bound is attained at ψ = R^{1/2}u, u a top eigenvector of R^{1/2}XR^{1/2}.
    let spec = inst.h0.decompose()?;
    let r_half = spec.power(-0.5)?;
    let sandwiched = HermitianOperator::new(r_half.entries() * inst.x.entries() * r_half.entries())?;
    let s = sandwiched.decompose()?;
    let vals = s.eigenvalues();
    let top = if vals[0].abs() > vals[vals.len() - 1].abs() { 0 } else { vals.len() - 1 };
    let psi = r_half.entries() * s.eigenvectors().column(top);
    let ratio = quadratic_form(&inst.x, &psi).abs() / quadratic_form(&inst.h0, &psi);
    out.check("form-bound-attained", -(ratio - a).abs() / a, 1e-10);
    out.observe("relative-form-bound", a);
    Ok(())
}

fn norm_equivalence(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let s0 = base_state(cfg, inst)?;
    let sx = perturb(&s0, &inst.x, eps)?;
    let c = equivalence_constants(&inst.h0, sx.hamiltonian(), eps)?;
    let mut rng = inst.rng(3);
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.equivalence_samples {
        let y = gaussian_hermitian(&mut rng, cfg.dim);
        let ratio = sx.frame().eps_norm(&y, eps)? / s0.frame().eps_norm(&y, eps)?;
        worst = worst.min(bracket_margin(ratio, c.m, c.big_m));
    }
    out.check("bracket", worst, 1e-9);
    out.observe("m", c.m);
    out.observe("M", c.big_m);
    Ok(())
}

fn comparability(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let s0 = base_state(cfg, inst)?;
    let sx = perturb(&s0, &inst.x, cfg.epsilon)?;
    let r = comparability_check(&inst.h0, sx.hamiltonian(), cfg.epsilon)?;
    out.check("inverse-identities", -r.max_identity_residual, IDENTITY_TOL);
    out.observe("difference-eps-norm", r.difference_eps_norm);
    Ok(())
}

fn mean_lambda(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let s0 = base_state(cfg, inst)?;
    let mut worst = f64::INFINITY;
    for v in std::iter::once(&inst.x).chain(&inst.directions) {
        let r = reg_mean(&s0, v, &DEFAULT_LAMBDA_GRID)?;
        worst = worst.min(-r.spread / (1.0 + r.mean.abs()));
    }
    out.check("spread", worst, 1e-10);
    Ok(())
}

fn kubo_oracle_suite(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let s0 = base_state(cfg, inst)?;
    let seed = inst.seed.wrapping_mul(1_000_003).wrapping_add(inst.index as u64);
    for n in 2..=cfg.max_order {
        let dirs = &inst.directions[..n];
        let k = kubo_n_point(&s0, dirs)?;
        let est = kubo_oracle(&s0, dirs, cfg.mc_samples, seed)?;
        let tol = (5.0 * est.stderr).max(1e-6 * (1.0 + k.value.abs()));
        out.check(&format!("n{n}/monte-carlo"), -(k.value - est.value).abs(), tol);
        out.observe(&format!("n{n}/imag"), k.imag);
        if n == 2 {
            let q = kubo_quadrature(&s0, dirs, DEFAULT_QUADRATURE_DEGREE)?;
            out.check("n2/quadrature", -(q - k.value).abs() / k.value.abs().max(1e-300), 1e-6);
        }
    }
    Ok(())
}

fn frechet(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let s0 = base_state(cfg, inst)?;
    let v = center(&s0, &inst.directions[0]);
    let h = default_step(&s0, &v, eps)?;
    for n in 1..=4 {
        let c = frechet_check(&s0, &v, n, h, eps)?;
        let predicted = c.sign * c.multiplicity * c.kubo;
        if n <= 3 {
            out.check(&format!("n{n}"), -c.residual, 1e-6 * (1.0 + predicted.abs()));
        } else {
            out.observe("n4/residual", c.residual);
        }
        out.observe(&format!("n{n}/literal-residual"), (c.fd - c.sign * c.kubo).abs());
        out.observe(&format!("n{n}/series-residual"), (c.fd - c.series_derivative).abs());
    }
    Ok(())
}

fn estimate_chain_suite(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let s0 = base_state(cfg, inst)?;
    let target = 0.5 * 2.0 * eps * (1.0 - s0.beta());
    for n in 1..=cfg.max_order {
        let dirs = inst.directions[..n]
            .iter()
            .map(|v| rescale(s0.frame(), v, eps, target))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| qim_core::Error::Input(e.to_string()))?;
        let ledger = estimate_chain(&s0, &dirs, eps)?;
        for f in &ledger.factor_margins {
            if f.gating {
                out.check(&format!("n{n}/{}", f.name), f.margin, f.tolerance);
            } else {
                out.observe(&format!("n{n}/{}", f.name), f.margin);
            }
        }
        out.check(&format!("n{n}/kubo-dominated"), ledger.rederived_margin, 0.0);
        out.observe(&format!("n{n}/closed-form-margin"), ledger.printed_margin);
    }
    Ok(())
}

/// `max_k sqrt(t_k / t_{k-2})` over the last three orders; steps of two
/// keep parity-vanishing terms from producing spurious ratios.
pub fn tail_ratio(terms: &[f64]) -> f64 {
    let n = terms.len() - 1;
    let lo = n.saturating_sub(2).max(2);
    (lo..=n)
        .map(|k| {
            if terms[k] == 0.0 {
                0.0
            } else if terms[k - 2] == 0.0 {
                f64::INFINITY
            } else {
                (terms[k] / terms[k - 2]).sqrt()
            }
        })
        .fold(0.0, f64::max)
}

fn taylor_radius(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let s0 = base_state(cfg, inst)?;
    let sx = perturb(&s0, &inst.x, eps)?;
    let target = 0.5 * 2.0 * eps * (1.0 - sx.beta());
    let v = rescale(sx.frame(), &inst.directions[0], eps, target)
        .map_err(|e| qim_core::Error::Input(e.to_string()))?;
    let lambda = 0.5 * 2.0 * eps * (1.0 - sx.beta()) / target;
    let p = taylor_probe(&sx, &v, &[lambda], cfg.taylor_order, eps)?;
    let n = cfg.taylor_order;
    let rel = (p.partial_sums[0][n] - p.direct[0]).abs() / p.direct[0].abs().max(1e-300);
    out.check("partial-sum", -rel, 1e-6);
    if n >= 2 {
        out.check("tail-ratio", 0.9 - tail_ratio(&p.terms(0)), 0.0);
    }
    out.observe("radius-bound", p.radius_bound);
    for (k, r) in p.envelope_ratios.iter().enumerate() {
        out.observe(&format!("envelope-ratio/{}", k + 1), *r);
    }
    Ok(())
}

fn transport_suite(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let a = base_state(cfg, inst)?;
    let b = perturb(&a, &inst.x, eps)?;
    let mut rng = inst.rng(10);
    let kind = cfg.perturbation.kind;
    let y = rescale(b.frame(), &draw(kind, &mut rng, cfg.dim), eps, 0.5 * (1.0 - b.beta()))
        .map_err(|e| qim_core::Error::Input(e.to_string()))?;
    let c = perturb(&b, &y, eps)?;
    let z1 = gaussian_hermitian(&mut rng, cfg.dim);
    let z2 = gaussian_hermitian(&mut rng, cfg.dim);
    let scale = 1.0 + z1.op_norm() + z2.op_norm();
    let tol = 1e-13 * scale;

    let zero = transport(&HermitianOperator::zeros(cfg.dim), &a, &b);
    out.check("zero", -zero.op_norm(), 0.0);
    let flat = transport(&transport(&z1, &a, &b), &b, &c).distance(&transport(&z1, &a, &c));
    out.check("flatness", -flat, tol);
    let lam: f64 = rng.random();
    let mixed = transport(&(&(&z1 * lam) + &(&z2 * (1.0 - lam))), &a, &b);
    let sep = &(&transport(&z1, &a, &b) * lam) + &(&transport(&z2, &a, &b) * (1.0 - lam));
    out.check("affinity", -mixed.distance(&sep), tol);
    out.check("centered", -b.expectation(&transport(&z1, &a, &b)).abs(), tol);

    let chart = to_chart(&a, &inst.x, eps)?;
    out.check("chart-recovery", -rho_distance(&chart.state()?, &b), 1e-11);

    let t = chart_transition(&a, &inst.x, &y, eps)?;
    out.check(
        "transition-bracket",
        bracket_margin(t.norm_ratio, t.constants.m, t.constants.big_m),
        1e-9,
    );
    if let Some(dev) = t.rho_deviation {
        out.check("transition-rho", -dev, 1e-11);
    }

    let y0 = rescale(a.frame(), &draw(kind, &mut rng, cfg.dim), eps, cfg.perturbation.target_eps_norm)
        .map_err(|e| qim_core::Error::Input(e.to_string()))?;
    out.observe("mixture-gap", mixture_gap(&a, &inst.x, &y0, 0.5, eps)?);
    let probe = convexity_probe(&a, &inst.x, &y0, &[0.0, 0.25, 0.5, 0.75, 1.0], eps)?;
    out.observe("hood-convex", probe.hood_convex as u8 as f64);
    out.observe("two-chart-covered", probe.covered as u8 as f64);
    Ok(())
}

fn route_suite(cfg: &RunConfig, inst: &Instance, out: &mut Out) -> SuiteResult {
    let eps = cfg.epsilon;
    let s0 = base_state(cfg, inst)?;
    let mut rng = inst.rng(11);
    let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = w.iter().sum();
    let noise: Vec<HermitianOperator> = (0..2)
        .map(|_| {
            let n = gaussian_hermitian(&mut rng, cfg.dim);
            let scale = 0.05 * cfg.perturbation.target_eps_norm / s0.frame().eps_norm(&n, eps)?;
            Ok(n.scaled(scale))
        })
        .collect::<qim_core::Result<_>>()?;
    let n3 = -&(&noise[0] + &noise[1]);
    let parts: Vec<HermitianOperator> = [&noise[0], &noise[1], &n3]
        .iter()
        .zip(&w)
        .map(|(n, wi)| &(&inst.x * (wi / total)) + n)
        .collect();
    let r = route_independence(&s0, &parts, eps)?;
    out.check("three-part", -r.max_rho_deviation, 1e-11);
    let half = inst.x.scaled(0.5);
    let r = route_independence(&s0, &[half.clone(), half], eps)?;
    out.check("halves", -r.max_rho_deviation, 1e-11);
    Ok(())
}

type SuiteFn = fn(&RunConfig, &Instance, &mut Out) -> SuiteResult;

fn suite_fn(name: &str) -> (SuiteFn, &'static str) {
    match name {
        "lemma2-monotonicity" => (lemma2_monotonicity, "eps-norm nondecreasing in eps and between form and omega norms"),
        "lemma1-formbound" => (lemma1_formbound, "eps = 0 norm bounds the quadratic form relative to H"),
        "norm-equivalence" => (norm_equivalence, "eps-norms at H0 and H_X are equivalent with constants m, M"),
        "comparability" => (comparability, "fractional-power factors are mutually inverse"),
        "mean-lambda" => (mean_lambda, "regularized mean is independent of lambda"),
        "kubo-oracle" => (kubo_oracle_suite, "closed-form Kubo function agrees with integral oracles"),
        "frechet" => (frechet, "free-energy derivatives equal (-1)^n (n-1)! Kubo_n for centered V"),
        "estimate-chain" => (estimate_chain_suite, "each factor of the n-point estimate holds and bounds |Kubo_n|"),
        "taylor-radius" => (taylor_radius, "Taylor series of the free energy converges inside the radius bound"),
        "transport" => (transport_suite, "parallel transport is affine, flat and charts are compatible"),
        "route-independence" => (route_suite, "sequential perturbations reach the single-shot state"),
        _ => unreachable!("suite names are validated"),
    }
}

/// Runs one suite on one instance; errors become a failed record.
pub fn run_instance(cfg: &RunConfig, suite: &str, inst: &Instance) -> (Vec<Record>, Vec<Observation>) {
    let (f, anchor) = suite_fn(suite);
    let prefix = format!("{suite}/s{}/i{}", inst.seed, inst.index);
    let mut out = Out {
        prefix: prefix.clone(),
        anchor,
        records: vec![],
        observations: vec![],
    };
    let start = Instant::now();
    let result = f(cfg, inst, &mut out);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    if let Err(e) = result {
        out.records.push(Record::failed(prefix, anchor, e.to_string()));
    }
    for r in &mut out.records {
        r.runtime_ms = elapsed;
    }
    (out.records, out.observations)
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn run_suite(cfg: &RunConfig) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut observations = Vec::new();
    let mut warnings = Vec::new();
    for &seed in &cfg.seeds {
        let ensemble = gen_ensemble(cfg, seed)?;
        if ensemble.is_empty() {
            warnings.push(format!("empty ensemble for seed {seed}"));
            continue;
        }
        for suite in ALL_SUITES.iter().filter(|s| cfg.wants(s)) {
            let parts: Vec<_> = ensemble
                .par_iter()
                .map(|inst| run_instance(cfg, suite, inst))
                .collect();
            for (r, o) in parts {
                records.extend(r);
                observations.extend(o);
            }
        }
    }
    if cfg.seeds.is_empty() {
        warnings.push("no seeds configured; empty ensemble".into());
    }
    Ok(Report {
        environment: Environment {
            seeds: cfg.seeds.clone(),
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            timestamp: timestamp(),
        },
        records,
        observations,
        warnings,
    })
}
