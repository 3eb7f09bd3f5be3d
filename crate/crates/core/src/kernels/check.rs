//! The neural-consistency self-check.

use super::{kernel_eval, kernel_eval_neural, KernelKind, KernelSpec};
use crate::error::Result;
use crate::numcore::Rng;

/// Sharpness values probed for histogram intersection.
pub const HI_BETAS: [f64; 4] = [10.0, 25.0, 50.0, 100.0];

/// A pair in the valid domain of `kind`: `[0.05, 0.95]^d` for histogram
/// intersection, `[-1, 1]^d` otherwise.
pub fn random_pair(rng: &mut Rng, kind: KernelKind, d: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = if kind == KernelKind::HistogramIntersection {
        (0.05, 0.95)
    } else {
        (-1.0, 1.0)
    };
    (rng.uniform_vec(d, lo, hi), rng.uniform_vec(d, lo, hi))
}

/// Largest absolute gap between the closed form and the neural evaluation
/// over `pairs` seeded random pairs of dimension `dim`.
pub fn neural_error(spec: &KernelSpec, seed: u64, pairs: usize, dim: usize) -> Result<f64> {
    let mut rng = Rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (u, v) = random_pair(&mut rng, spec.kind, dim);
        worst = worst.max((kernel_eval(spec, &u, &v)? - kernel_eval_neural(spec, &u, &v)?).abs());
    }
    Ok(worst)
}

/// [`neural_error`] of histogram intersection at each of [`HI_BETAS`], on
/// one shared pair set.
pub fn hi_beta_errors(seed: u64, pairs: usize, dim: usize) -> Result<Vec<(f64, f64)>> {
    HI_BETAS
        .iter()
        .map(|&beta| {
            let spec = KernelSpec::new(KernelKind::HistogramIntersection).with_beta(beta);
            Ok((beta, neural_error(&spec, seed, pairs, dim)?))
        })
        .collect()
}
