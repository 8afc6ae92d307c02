//! The exploratory subcommands: each maps the ensemble to a table of
//! results that is written as JSON or CSV.

use std::path::{Path, PathBuf};

use qim_core::epsnorms::{default_eps_grid, monotonicity_scan};
use qim_core::gibbs::{make_state, perturb};
use qim_core::kubo::{kubo_n_point, kubo_oracle, taylor_probe};
use qim_core::manifold::chart_transition;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::ensemble::{draw, gen_ensemble, rescale, Instance};
use crate::report::{io_err, Format};
use crate::HarnessError;

/// JSON documents plus the equivalent flat rows.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: Vec<Value>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| HarnessError::Config(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Config(format!("csv encoding: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf, HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let (path, body) = match format {
            Format::Json => (
                dir.join(format!("{stem}.json")),
                serde_json::to_string_pretty(&self.json).expect("values serialize") + "\n",
            ),
            Format::Csv => (dir.join(format!("{stem}.csv")), self.to_csv()?),
        };
        std::fs::write(&path, body).map_err(io_err(&path))?;
        Ok(path)
    }
}

fn g(x: f64) -> String {
    format!("{x:e}")
}

fn ensembles(cfg: &RunConfig) -> Result<Vec<Instance>, HarnessError> {
    let mut all = Vec::new();
    for &s in &cfg.seeds {
        all.extend(gen_ensemble(cfg, s)?);
    }
    Ok(all)
}

fn label(inst: &Instance) -> String {
    format!("s{}/i{}", inst.seed, inst.index)
}

/// Kubo n-point values at the base state with a Monte-Carlo cross-check.
pub fn kubo_table(cfg: &RunConfig, n: usize) -> Result<Table, HarnessError> {
    if n == 0 || n > cfg.max_order {
        return Err(HarnessError::Config(format!(
            "--n {n} outside 1..={} (max_order)",
            cfg.max_order
        )));
    }
    let mut t = Table::new(&["instance", "n", "value", "imag", "oracle_value", "oracle_stderr", "agrees"]);
    for inst in ensembles(cfg)? {
        let s0 = make_state(&inst.h0, cfg.beta0)?;
        let dirs = &inst.directions[..n];
        let mut k = kubo_n_point(&s0, dirs)?;
        if n >= 2 {
            let seed = inst.seed.wrapping_mul(1_000_003).wrapping_add(inst.index as u64);
            k = k.with_oracle(&kubo_oracle(&s0, dirs, cfg.mc_samples, seed)?);
        }
        let opt = |v: Option<f64>| v.map(g).unwrap_or_default();
        t.row(vec![
            label(&inst),
            n.to_string(),
            g(k.value),
            g(k.imag),
            opt(k.oracle_value),
            opt(k.oracle_stderr),
            k.oracle_agrees().map(|b| b.to_string()).unwrap_or_default(),
        ]);
        t.json.push(json!({ "instance": label(&inst), "result": k }));
    }
    Ok(t)
}

/// Taylor probes of the free energy at `ρ_X` along a direction with
/// `‖V‖_ε = ε(1-β_X)`, on λ = 0.25, 0.5, 0.75, 1 times the radius bound / 2.
pub fn taylor_table(cfg: &RunConfig) -> Result<Table, HarnessError> {
    let eps = cfg.epsilon;
    let mut t = Table::new(&["instance", "lambda", "order", "coefficient", "partial_sum", "direct"]);
    for inst in ensembles(cfg)? {
        let s0 = make_state(&inst.h0, cfg.beta0)?;
        let sx = perturb(&s0, &inst.x, eps)?;
        let v = rescale(sx.frame(), &inst.directions[0], eps, eps * (1.0 - sx.beta()))?;
        let grid = [0.25, 0.5, 0.75, 1.0];
        let p = taylor_probe(&sx, &v, &grid, cfg.taylor_order, eps)?;
        for (i, l) in p.lambda_grid.iter().enumerate() {
            for (k, c) in p.coeffs.iter().enumerate() {
                t.row(vec![label(&inst), g(*l), k.to_string(), g(*c), g(p.partial_sums[i][k]), g(p.direct[i])]);
            }
        }
        t.json.push(json!({ "instance": label(&inst), "probe": p }));
    }
    Ok(t)
}

/// ε-norm scans of each chart perturbation over the default grid.
pub fn norms_table(cfg: &RunConfig) -> Result<Table, HarnessError> {
    let mut t = Table::new(&["instance", "epsilon", "eps_norm", "omega_norm", "form_bound"]);
    for inst in ensembles(cfg)? {
        let r = monotonicity_scan(&inst.x, &inst.h0, &default_eps_grid())?;
        for (e, v) in r.epsilon_grid.iter().zip(&r.values) {
            t.row(vec![label(&inst), g(*e), g(*v), g(r.omega_norm), g(r.form_bound_surrogate)]);
        }
        t.json.push(json!({ "instance": label(&inst), "scan": r }));
    }
    Ok(t)
}

/// Chart transitions `ρ₀ → ρ_X → ρ_{X+Y}` with `‖Y‖_ε(X) = (1-β_X)/2`.
pub fn transport_table(cfg: &RunConfig) -> Result<Table, HarnessError> {
    let eps = cfg.epsilon;
    let mut t = Table::new(&["instance", "m", "M", "norm_ratio", "in_bracket", "rho_deviation"]);
    for inst in ensembles(cfg)? {
        let s0 = make_state(&inst.h0, cfg.beta0)?;
        let sx = perturb(&s0, &inst.x, eps)?;
        let mut rng: ChaCha8Rng = inst.rng(10);
        let y = rescale(sx.frame(), &draw(cfg.perturbation.kind, &mut rng, cfg.dim), eps, 0.5 * (1.0 - sx.beta()))?;
        let s = chart_transition(&s0, &inst.x, &y, eps)?.summary();
        t.row(vec![
            label(&inst),
            g(s.m),
            g(s.big_m),
            g(s.norm_ratio),
            s.in_bracket.to_string(),
            s.deviations.first().map(|d| g(*d)).unwrap_or_default(),
        ]);
        t.json.push(json!({ "instance": label(&inst), "transition": s }));
    }
    Ok(t)
}
