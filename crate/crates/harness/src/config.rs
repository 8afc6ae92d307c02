use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

pub const ALL_SUITES: [&str; 11] = [
    "lemma2-monotonicity",
    "lemma1-formbound",
    "norm-equivalence",
    "comparability",
    "mean-lambda",
    "kubo-oracle",
    "frechet",
    "estimate-chain",
    "taylor-radius",
    "transport",
    "route-independence",
];

/// Suites that perturb the base state and so need the target inside the hood.
const HOOD_SUITES: [&str; 6] = [
    "norm-equivalence",
    "comparability",
    "frechet",
    "taylor-radius",
    "transport",
    "route-independence",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    /// `h_k = k`, k = 1..d.
    Linear,
    /// `h_k = 1 + c·k^s`, k = 0..d-1.
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    Diagonal,
    Dense,
    Offdiag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub target_eps_norm: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub epsilon: f64,
    pub beta0: f64,
    pub spectrum: SpectrumSpec,
    pub perturbation: PerturbationSpec,
    pub seeds: Vec<u64>,
    /// Ensemble size per seed.
    pub instances: usize,
    pub suites: Vec<String>,
    pub output_dir: PathBuf,
    /// Highest Kubo order exercised by the oracle and estimate-chain suites.
    pub max_order: usize,
    pub mc_samples: usize,
    /// Random comparison directions per instance in norm-equivalence.
    pub equivalence_samples: usize,
    pub taylor_order: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 6,
            epsilon: 0.25,
            beta0: 0.5,
            spectrum: SpectrumSpec {
                kind: SpectrumKind::Linear,
                c: 1.0,
                s: 1.0,
            },
            perturbation: PerturbationSpec {
                kind: PerturbationKind::Dense,
                target_eps_norm: 0.3,
            },
            seeds: vec![1],
            instances: 10,
            suites: ALL_SUITES.iter().map(|s| s.to_string()).collect(),
            output_dir: PathBuf::from("out"),
            max_order: 4,
            mc_samples: 200_000,
            equivalence_samples: 100,
            taylor_order: 6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.dim == 0 || self.dim > 64 {
            return bad(format!("dim {} outside 1..=64", self.dim));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon {} outside (0, 1/2)", self.epsilon));
        }
        if !(self.beta0 > 0.0 && self.beta0 < 1.0) {
            return bad(format!("beta0 {} outside (0, 1)", self.beta0));
        }
        let sp = &self.spectrum;
        if sp.kind == SpectrumKind::Power && !(sp.c > 0.0 && sp.c.is_finite() && sp.s.is_finite()) {
            return bad(format!("power spectrum needs c > 0 and finite s, got c={} s={}", sp.c, sp.s));
        }
        let t = self.perturbation.target_eps_norm;
        if !(t > 0.0 && t.is_finite()) {
            return bad(format!("target_eps_norm {t} must be positive"));
        }
        if self.perturbation.kind == PerturbationKind::Offdiag && self.dim < 2 {
            return bad("offdiag perturbations need dim >= 2".into());
        }
        for s in &self.suites {
            if !ALL_SUITES.contains(&s.as_str()) {
                return bad(format!("unknown suite {s:?}"));
            }
        }
        if t >= 1.0 - self.beta0 && self.suites.iter().any(|s| HOOD_SUITES.contains(&s.as_str())) {
            return bad(format!(
                "target_eps_norm {t} must be below 1 - beta0 = {} for the selected suites",
                1.0 - self.beta0
            ));
        }
        if !(1..=8).contains(&self.max_order) {
            return bad(format!("max_order {} outside 1..=8", self.max_order));
        }
        if !(1..=8).contains(&self.taylor_order) {
            return bad(format!("taylor_order {} outside 1..=8", self.taylor_order));
        }
        if self.mc_samples < 2 {
            return bad("mc_samples must be at least 2".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, output location excluded.
    pub fn hash(&self) -> String {
        let mut science = self.clone();
        science.output_dir = PathBuf::new();
        let json = serde_json::to_string(&science).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn wants(&self, suite: &str) -> bool {
        self.suites.iter().any(|s| s == suite)
    }

    /// Diagonal of `H₀`.
    pub fn spectrum_values(&self) -> Vec<f64> {
        match self.spectrum.kind {
            SpectrumKind::Linear => (1..=self.dim).map(|k| k as f64).collect(),
            SpectrumKind::Power => (0..self.dim)
                .map(|k| 1.0 + self.spectrum.c * (k as f64).powf(self.spectrum.s))
                .collect(),
        }
    }
}
