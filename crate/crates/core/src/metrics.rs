//! Normalized error over an SNR sweep.
//!
//! The nested normalizations in the definition collapse to the per-SNR
//! total absolute error over its maximum across the sweep; the chain is
//! kept literal here so each intermediate stays auditable.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::NearFieldParams;
use crate::fmath;

/// Flattens the field parameter set to the vector compared by the metric:
/// [beta, alpha, x0..., sigma].
pub fn param_vector(p: &NearFieldParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 + p.x0.dim());
    v.push(p.beta);
    v.push(p.alpha);
    v.extend_from_slice(&p.x0.coords);
    v.push(p.sigma);
    v
}

/// Per-sweep-entry normalized error. `estimates[tau][m]` must line up
/// with `ground_truth[m]`; every cell is required.
pub fn normalized_error(
    ground_truth: &[Vec<f64>],
    estimates: &[Vec<Vec<f64>>],
) -> Result<Vec<f64>> {
    if ground_truth.is_empty() || estimates.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let m = ground_truth.len();
    let width = ground_truth[0].len();
    for row in estimates {
        if row.len() != m {
            return Err(Error::Contract("estimate table missing an attractor cell"));
        }
        for cell in row {
            if cell.len() != width {
                return Err(Error::Contract("estimate cell has wrong parameter count"));
            }
        }
    }

    // lambda_tau: total absolute parameter error at sweep entry tau.
    let lambda: Vec<f64> = estimates
        .iter()
        .map(|row| {
            row.iter()
                .zip(ground_truth)
                .map(|(est, gt)| {
                    est.iter().zip(gt).map(|(e, g)| fmath::abs(g - e)).sum::<f64>()
                })
                .sum()
        })
        .collect();
    let gamma = lambda.iter().cloned().fold(0.0f64, f64::max);
    if gamma == 0.0 {
        // All estimates perfect at every sweep entry.
        return Ok(alloc::vec![0.0; estimates.len()]);
    }
    let theta: Vec<f64> = lambda.iter().map(|l| l / gamma).collect();
    // phi is the (identity) sum over the per-entry scalar.
    let phi = theta;
    let phi_max = phi.iter().cloned().fold(0.0f64, f64::max);
    Ok(phi.iter().map(|p| p / phi_max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_estimates_score_zero() {
        let gt = vec![vec![1.0, 1.0, 0.0, 0.5]];
        let est = vec![vec![gt[0].clone()], vec![gt[0].clone()]];
        assert_eq!(normalized_error(&gt, &est).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_entry_self_normalizes() {
        let gt = vec![vec![1.0]];
        let est = vec![vec![vec![1.5]]];
        assert_eq!(normalized_error(&gt, &est).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_entries_hand_evaluation() {
        // Total absolute errors {2, 4} collapse to {0.5, 1.0}.
        let gt = vec![vec![0.0, 0.0]];
        let est = vec![vec![vec![1.0, 1.0]], vec![vec![2.0, 2.0]]];
        assert_eq!(normalized_error(&gt, &est).unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn missing_cell_is_contract_violation() {
        let gt = vec![vec![0.0], vec![0.0]];
        let est = vec![vec![vec![1.0]]];
        assert!(normalized_error(&gt, &est).is_err());
    }

    #[test]
    fn scale_invariance() {
        let gt = vec![vec![0.0, 0.0]];
        let a = vec![vec![vec![0.1, 0.2]], vec![vec![0.4, 0.1]]];
        let b = vec![vec![vec![1.0, 2.0]], vec![vec![4.0, 1.0]]];
        let ea = normalized_error(&gt, &a).unwrap();
        let eb = normalized_error(&gt, &b).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}
