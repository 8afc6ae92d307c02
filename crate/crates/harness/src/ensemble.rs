use qim_core::epsnorms::ResolventFrame;
use qim_core::sampling::{gaussian_diagonal, gaussian_hermitian, gaussian_offdiagonal};
use qim_core::HermitianOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{PerturbationKind, RunConfig};
use crate::HarnessError;

#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub index: usize,
    pub h0: HermitianOperator,
    /// Chart perturbation, `‖X‖_ε = target`.
    pub x: HermitianOperator,
    /// Kubo directions, each with `‖V‖_ε = target`.
    pub directions: Vec<HermitianOperator>,
}

impl Instance {
    /// Independent generator for suite-local draws; `tag` separates suites.
    pub fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        r.set_stream(self.index as u64 + 1);
        r
    }
}

pub(crate) fn draw(kind: PerturbationKind, rng: &mut ChaCha8Rng, dim: usize) -> HermitianOperator {
    match kind {
        PerturbationKind::Diagonal => gaussian_diagonal(rng, dim),
        PerturbationKind::Dense => gaussian_hermitian(rng, dim),
        PerturbationKind::Offdiag => gaussian_offdiagonal(rng, dim),
    }
}

/// Rescales `x` so that its ε-norm in `frame` equals `target`.
pub fn rescale(frame: &ResolventFrame, x: &HermitianOperator, eps: f64, target: f64) -> Result<HermitianOperator, HarnessError> {
    let n = frame.eps_norm(x, eps)?;
    if n == 0.0 {
        return Err(HarnessError::Config("drew a zero perturbation; cannot rescale".into()));
    }
    Ok(x.scaled(target / n))
}

/// Instance `i` draws from stream `i` of a generator seeded with `seed`.
pub fn gen_ensemble(config: &RunConfig, seed: u64) -> Result<Vec<Instance>, HarnessError> {
    config.validate()?;
    let h0 = HermitianOperator::from_real_diagonal(&config.spectrum_values())?;
    let frame = ResolventFrame::new(&h0)?;
    let (eps, target) = (config.epsilon, config.perturbation.target_eps_norm);
    let kind = config.perturbation.kind;
    let count = config.max_order;
    (0..config.instances)
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let x = rescale(&frame, &draw(kind, &mut rng, config.dim), eps, target)?;
            let directions = (0..count)
                .map(|_| rescale(&frame, &draw(kind, &mut rng, config.dim), eps, target))
                .collect::<Result<_, _>>()?;
            Ok(Instance {
                seed,
                index,
                h0: h0.clone(),
                x,
                directions,
            })
        })
        .collect()
}
