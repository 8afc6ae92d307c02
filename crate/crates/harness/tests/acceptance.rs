//! Acceptance suite: one line per criterion. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero if any gated
//! criterion fails.

use qim_core::gibbs::{center, make_state};
use qim_core::kubo::{default_step, frechet_check};
use qim_core::sampling::pauli_x;
use qim_core::HermitianOperator;
use qim_harness::config::{PerturbationKind, SpectrumKind, SpectrumSpec};
use qim_harness::{run_suite, Record, Report, RunConfig};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn config(suites: &[&str], instances: usize) -> RunConfig {
    RunConfig {
        suites: suites.iter().map(|s| s.to_string()).collect(),
        instances,
        seeds: vec![20_240_601],
        ..RunConfig::default()
    }
}

fn worst<'a>(recs: impl IntoIterator<Item = &'a Record>) -> (usize, usize, f64, String) {
    let mut n = 0;
    let mut failed = 0;
    let mut w = f64::INFINITY;
    let mut first_fail = String::new();
    for r in recs {
        n += 1;
        if !r.pass {
            failed += 1;
            if first_fail.is_empty() {
                first_fail = format!(" first failure {} {}", r.name, r.error.as_deref().unwrap_or(""));
            }
        }
        w = w.min(r.margin);
    }
    (n, failed, w, first_fail)
}

fn from_reports(id: &'static str, title: &'static str, reports: &[Report]) -> Outcome {
    let (n, failed, w, first) = worst(reports.iter().flat_map(|r| &r.records));
    Outcome {
        id,
        title,
        pass: n > 0 && failed == 0,
        detail: format!("{n} records, {failed} failed, worst margin {w:.3e}{first}"),
    }
}

fn run(cfg: &RunConfig) -> Report {
    run_suite(cfg).expect("valid configuration")
}

fn criterion_1() -> Outcome {
    let cfg = config(&["lemma2-monotonicity"], 50);
    from_reports("1", "eps-norm monotone in eps and bracketed by form/omega norms", &[run(&cfg)])
}

fn criterion_2() -> Outcome {
    let cfg = config(&["mean-lambda"], 50);
    from_reports("2", "regularized mean independent of lambda", &[run(&cfg)])
}

fn criterion_3() -> Outcome {
    let mut cfg = config(&["norm-equivalence", "comparability"], 20);
    cfg.perturbation.target_eps_norm = 0.9 * (1.0 - cfg.beta0);
    cfg.equivalence_samples = 100;
    from_reports("3", "norm equivalence bracket [m, M] and inverse identities", &[run(&cfg)])
}

fn criterion_4() -> Outcome {
    let reports: Vec<Report> = [2, 4, 8]
        .into_iter()
        .map(|d| {
            let mut cfg = config(&["kubo-oracle"], 2);
            cfg.dim = d;
            cfg.max_order = 4;
            cfg.mc_samples = 1_000_000;
            run(&cfg)
        })
        .collect();
    from_reports("4", "Kubo closed form vs Monte-Carlo (1e6) and quadrature oracles, n in 2..4, d in {2,4,8}", &reports)
}

fn criterion_5() -> (Outcome, Outcome) {
    let mut cfg = config(&["frechet"], 10);
    cfg.perturbation.kind = PerturbationKind::Dense;
    let report = run(&cfg);
    let (n, failed, w, first) = worst(&report.records);

    let s = make_state(&HermitianOperator::from_real_diagonal(&[1.0, 2.0]).unwrap(), 0.5).unwrap();
    let v = pauli_x();
    let h = default_step(&s, &v, 0.25).unwrap();
    let c = frechet_check(&s, &v, 2, h, 0.25).unwrap();
    let sigma_ok = (c.fd - 0.924_234).abs() <= 1e-6;

    // The unscaled identity |fd - (-1)^n Kubo_n|: holds for n = 1, 2, and at
    // n = 3 the derivative is exactly twice (-1)^n Kubo_n.
    let mut literal_ok_low = true;
    let mut ratio3 = f64::NAN;
    let mut worst_literal3 = 0.0_f64;
    let inst_state = make_state(
        &HermitianOperator::from_real_diagonal(&cfg.spectrum_values()).unwrap(),
        cfg.beta0,
    )
    .unwrap();
    let ens = qim_harness::gen_ensemble(&cfg, cfg.seeds[0]).unwrap();
    for inst in &ens {
        let v = center(&inst_state, &inst.directions[0]);
        let h = default_step(&inst_state, &v, cfg.epsilon).unwrap();
        for k in 1..=3 {
            let f = frechet_check(&inst_state, &v, k, h, cfg.epsilon).unwrap();
            let lit = (f.fd - f.sign * f.kubo).abs();
            if k < 3 {
                literal_ok_low &= lit <= 1e-6 * (1.0 + f.kubo.abs());
            } else {
                worst_literal3 = worst_literal3.max(lit / (1.0 + f.kubo.abs()));
                ratio3 = f.fd / (f.sign * f.kubo);
            }
        }
    }
    let corrected = Outcome {
        id: "5",
        title: "free-energy derivatives vs Kubo, |FD_n - (-1)^n (n-1)! Kubo_n|, n in 1..3, plus sigma_x n=2",
        pass: n > 0 && failed == 0 && sigma_ok,
        detail: format!(
            "{n} records, {failed} failed, worst margin {w:.3e}{first}; sigma_x fd = {:.9} (|fd - 0.924234| = {:.1e})",
            c.fd,
            (c.fd - 0.924_234).abs()
        ),
    };
    let literal = Outcome {
        id: "5-as-stated",
        title: "unscaled identity |FD_n - (-1)^n Kubo_n| <= 1e-6(1+|Kubo_n|)",
        pass: literal_ok_low && worst_literal3 <= 1e-6,
        detail: format!(
            "holds for n = 1, 2: {literal_ok_low}; n = 3 worst relative residual {worst_literal3:.3e}, fd/((-1)^3 Kubo_3) = {ratio3:.6} (the simplex volume factor 2!)"
        ),
    };
    (corrected, literal)
}

fn criterion_6() -> (Outcome, String) {
    let mut reports = Vec::new();
    let mut closed = f64::INFINITY;
    for eps in [0.1, 0.25, 0.4] {
        let mut cfg = config(&["estimate-chain"], 20);
        cfg.epsilon = eps;
        cfg.max_order = 4;
        let r = run(&cfg);
        for o in r.observations.iter().filter(|o| o.name.ends_with("closed-form-margin")) {
            closed = closed.min(o.value);
        }
        reports.push(r);
    }
    (
        from_reports("6", "estimate chain factors >= 0 and |Kubo_n| <= re-derived bound, n <= 4, eps in {0.1,0.25,0.4}", &reports),
        format!("closed-form bound comparison (reported, not gated): worst relative margin {closed:.3e}"),
    )
}

fn criterion_7() -> Outcome {
    let cfg = config(&["taylor-radius"], 10);
    from_reports("7", "Taylor partial sums to order 6 match direct free energy at half the radius; tail ratio < 0.9", &[run(&cfg)])
}

fn criterion_8() -> Outcome {
    let cfg = config(&["transport", "route-independence"], 20);
    from_reports("8", "transport identities, route independence <= 1e-11, transition ratio in [m, M]", &[run(&cfg)])
}

fn criterion_9() -> Outcome {
    let mut cfg = config(&[], 3);
    cfg.suites = qim_harness::ALL_SUITES.iter().map(|s| s.to_string()).collect();
    cfg.dim = 4;
    cfg.mc_samples = 20_000;
    cfg.spectrum = SpectrumSpec {
        kind: SpectrumKind::Power,
        c: 0.7,
        s: 1.3,
    };
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(&cfg))
    };
    let a = in_pool(1).without_timing();
    let b = in_pool(4).without_timing();
    let c = in_pool(4).without_timing();
    let ja = serde_json::to_string(&a).unwrap();
    let same = ja == serde_json::to_string(&b).unwrap() && ja == serde_json::to_string(&c).unwrap();
    Outcome {
        id: "9",
        title: "identical records for identical config and seed (1 vs 4 threads, repeated)",
        pass: same && !a.records.is_empty(),
        detail: format!("{} records compared, byte-identical JSON without timing: {same}", a.records.len()),
    }
}

fn main() {
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    let (c5, c5_literal) = criterion_5();
    outcomes.push(c5);
    let (c6, c6_note) = criterion_6();
    outcomes.push(c6);
    outcomes.push(criterion_7());
    outcomes.push(criterion_8());
    outcomes.push(criterion_9());

    for o in &outcomes {
        println!(
            "criterion {:<2} {} :: {} :: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.detail
        );
    }
    println!(
        "criterion {} {} :: {} :: {}",
        c5_literal.id,
        if c5_literal.pass { "PASS" } else { "FAIL" },
        c5_literal.title,
        c5_literal.detail
    );
    println!("note        {c6_note}");

    let failed: Vec<_> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
