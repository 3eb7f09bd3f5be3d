//! Dense matrices, seeded randomness and the numerically stable reductions
//! shared by every other module, plus the central-difference gradient oracle.

mod matrix;
mod rng;

pub use matrix::{dot, sq_dist, Matrix};
pub use rng::Rng;

use crate::error::{Error, Result};

/// Default step for [`finite_diff_grad`].
pub const FD_STEP: f64 = 1e-5;

/// `log Σ exp(x_i)` via max-shift.
pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    let max = xs
        .iter()
        .copied()
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        .ok_or(Error::EmptyReduction)?;
    if xs.len() == 1 || max.is_infinite() {
        return Ok(max);
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    Ok(max + s.ln())
}

/// Cross-entropy of `softmax(logits)` against `label`, with the probabilities.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::BadLabel {
            label,
            classes: logits.len(),
        });
    }
    let lse = log_sum_exp(logits)?;
    let probs: Vec<f64> = logits.iter().map(|&z| (z - lse).exp()).collect();
    Ok((lse - logits[label], probs))
}

/// Probabilities only; see [`softmax_cross_entropy`].
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(logits)?;
    Ok(logits.iter().map(|&z| (z - lse).exp()).collect())
}

/// Central-difference gradient of `f` at `theta`.
pub fn finite_diff_grad<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let plus = f(&x);
        x[i] = theta[i] - h;
        let minus = f(&x);
        x[i] = theta[i];
        for v in [plus, minus] {
            if !v.is_finite() {
                return Err(Error::NonFiniteObjective { coord: i, value: v });
            }
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// `|a - b| / max(1e-8, |a| + |b|)`.
pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Vector form of [`rel_error`] using Euclidean norms.
pub fn rel_error_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lse_examples() {
        assert_eq!(log_sum_exp(&[0.0]).unwrap(), 0.0);
        let v = log_sum_exp(&[3.5, 3.5]).unwrap();
        assert!((v - 4.193_147_180_559_945).abs() < 1e-14);
        // 1000 + ln 2 from a 40-digit evaluation
        let big = log_sum_exp(&[1000.0, 1000.0]).unwrap();
        assert!((big - 1_000.693_147_180_56).abs() < 1e-12);
        assert!(matches!(log_sum_exp(&[]), Err(Error::EmptyReduction)));
    }

    #[test]
    fn cross_entropy_examples() {
        let (loss, probs) = softmax_cross_entropy(&[0.0; 4], 2).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        assert!(probs.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        // references from 40-digit evaluation of log(1 + e^-10)
        let (l0, _) = softmax_cross_entropy(&[10.0, 0.0], 0).unwrap();
        assert!((l0 - 4.539_889_921_686_465e-5).abs() < 1e-15);
        let (l1, _) = softmax_cross_entropy(&[0.0, 10.0], 0).unwrap();
        assert!((l1 - 10.000_045_398_899_217).abs() < 1e-12);

        assert!(matches!(
            softmax_cross_entropy(&[0.0, 1.0], 2),
            Err(Error::BadLabel { .. })
        ));
    }

    #[test]
    fn finite_differences() {
        let g = finite_diff_grad(|t| t[0] * t[0], &[3.0], FD_STEP).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-9);
        let z = finite_diff_grad(|_| 4.2, &[1.0, -2.0, 0.5], FD_STEP).unwrap();
        assert_eq!(z, vec![0.0; 3]);
        let bad = finite_diff_grad(|t| if t[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], 1e-3);
        assert!(matches!(bad, Err(Error::NonFiniteObjective { coord: 0, .. })));
    }

    #[test]
    fn rel_error_near_zero() {
        assert_eq!(rel_error(0.0, 0.0), 0.0);
        assert!(rel_error(1e-12, 0.0) < 1e-3);
        assert!((rel_error(1.0, 3.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn lse_bounds(xs in proptest::collection::vec(-500.0f64..500.0, 1..20)) {
            let m = xs.iter().copied().fold(f64::MIN, f64::max);
            let v = log_sum_exp(&xs).unwrap();
            prop_assert!(v >= m);
            prop_assert!(v <= m + (xs.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn softmax_is_distribution(xs in proptest::collection::vec(-300.0f64..300.0, 1..12)) {
            let p = softmax(&xs).unwrap();
            prop_assert!(p.iter().all(|&q| q > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
