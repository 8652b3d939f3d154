//! Per-segment estimation of near-field parameters: gradient descent over
//! (sigma, x0) on growing sample prefixes, then weighted fusion of the
//! per-prefix estimates.
//!
//! Sigma is optimized in log-space so positivity never needs a clamp; the
//! reported values are linear. The descent is plain fixed-step with step
//! halving whenever the objective would increase.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::traj::{ControlSample, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct FitterConfig {
    pub learning_rate_x0: f64,
    pub learning_rate_sigma: f64,
    pub max_iters: usize,
    /// Convergence threshold on the gradient norm.
    pub grad_tol: f64,
    /// Consecutive-decrease run length for the near/far switch detector.
    pub dk_switch: usize,
    /// Initial shape scale; derived from the covered distance when absent.
    pub sigma_init: Option<f64>,
    /// Initial center distance along the segment direction; derived from
    /// the covered distance when absent.
    pub r0_init: Option<f64>,
}

impl Default for FitterConfig {
    fn default() -> Self {
        FitterConfig {
            learning_rate_x0: 0.05,
            learning_rate_sigma: 0.05,
            max_iters: 500,
            grad_tol: 1e-8,
            dk_switch: 3,
            sigma_init: None,
            r0_init: None,
        }
    }
}

/// One gradient-descent solution obtained at prefix size `n_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitIteration {
    pub q: usize,
    pub n_samples: usize,
    pub x0_hat: Point,
    pub sigma_hat: f64,
    /// Mean-square error of the converged fit.
    pub j_value: f64,
}

/// Top speed and deceleration amplitude read off at the switch sample;
/// agents are assumed to stop on the center, so alpha equals beta.
pub fn estimate_beta_alpha(speeds: &[f64], switch_index: usize) -> (f64, f64) {
    let beta = speeds[switch_index];
    (beta, beta)
}

/// Mean-square error between the observed control speeds and the
/// near-range law with fixed (beta, alpha).
pub fn objective(sigma: f64, x0: &Point, beta: f64, alpha: f64, near_samples: &[ControlSample]) -> f64 {
    let n = near_samples.len() as f64;
    let s2 = sigma * sigma;
    near_samples
        .iter()
        .map(|s| {
            let r = s.z.distance(x0);
            let model = beta - alpha * fmath::exp(-(r * r) / s2);
            let res = s.speed() - model;
            res * res
        })
        .sum::<f64>()
        / n
}

/// Analytic gradient of [`objective`] in (sigma, x0); agrees with central
/// finite differences to better than 1e-5 relative error.
pub fn gradient(
    sigma: f64,
    x0: &Point,
    beta: f64,
    alpha: f64,
    near_samples: &[ControlSample],
) -> (f64, Vec<f64>) {
    let n = near_samples.len() as f64;
    let s2 = sigma * sigma;
    let mut d_sigma = 0.0;
    let mut d_x0 = alloc::vec![0.0; x0.dim()];
    for s in near_samples {
        let r = s.z.distance(x0);
        let e = alpha * fmath::exp(-(r * r) / s2);
        let res = s.speed() - (beta - e);
        // d(model)/d(x0) = -2 e (z - x0) / sigma^2, so
        // d(res^2)/d(x0) = 4 res e (z - x0) / sigma^2.
        for (g, (zi, ci)) in d_x0.iter_mut().zip(s.z.coords.iter().zip(&x0.coords)) {
            *g += 4.0 * res * e * (zi - ci) / s2;
        }
        // d(model)/d(sigma) = -2 e r^2 / sigma^3.
        d_sigma += 4.0 * res * e * (r * r) / (s2 * sigma);
    }
    d_sigma /= n;
    for g in &mut d_x0 {
        *g /= n;
    }
    (d_sigma, d_x0)
}

fn grad_norm(d_sigma: f64, d_x0: &[f64]) -> f64 {
    fmath::sqrt(d_sigma * d_sigma + d_x0.iter().map(|g| g * g).sum::<f64>())
}

/// Runs the descent from a warm start to convergence; returns the final
/// (sigma, x0, J). The sigma step acts on ln(sigma).
fn descend(
    mut sigma: f64,
    mut x0: Point,
    beta: f64,
    alpha: f64,
    samples: &[ControlSample],
    cfg: &FitterConfig,
) -> (f64, Point, f64) {
    let mut j = objective(sigma, &x0, beta, alpha, samples);
    let mut eta_x = cfg.learning_rate_x0;
    let mut eta_s = cfg.learning_rate_sigma;
    for _ in 0..cfg.max_iters {
        let (d_sigma, d_x0) = gradient(sigma, &x0, beta, alpha, samples);
        let d_log_sigma = d_sigma * sigma;
        if grad_norm(d_log_sigma, &d_x0) < cfg.grad_tol {
            break;
        }
        // Backtracking: halve the steps until the objective decreases.
        let mut improved = false;
        for _ in 0..40 {
            let cand_sigma = sigma * fmath::exp(-eta_s * d_log_sigma);
            let cand_x0 = Point::new(
                x0.coords.iter().zip(&d_x0).map(|(c, g)| c - eta_x * g).collect(),
            );
            let cand_j = objective(cand_sigma, &cand_x0, beta, alpha, samples);
            if cand_j < j {
                sigma = cand_sigma;
                x0 = cand_x0;
                j = cand_j;
                improved = true;
                break;
            }
            eta_x *= 0.5;
            eta_s *= 0.5;
        }
        if !improved {
            break;
        }
        // Let the steps grow after a success so the descent can traverse
        // ill-conditioned valleys; backtracking shrinks them again.
        eta_x = (eta_x * 1.5).min(cfg.learning_rate_x0 * 1e4);
        eta_s = (eta_s * 1.5).min(cfg.learning_rate_sigma * 1e4);
    }
    (sigma, x0, j)
}

/// Fits every prefix of the near samples (N = 3..len), warm-starting each
/// descent from the previous estimate. Prefixes whose objective blows up
/// past ten times its starting value are dropped from the output.
pub fn fit_segment(
    near_samples: &[ControlSample],
    beta: f64,
    alpha: f64,
    cfg: &FitterConfig,
) -> Result<Vec<FitIteration>> {
    if near_samples.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: near_samples.len() });
    }
    let dim = near_samples[0].z.dim();

    // Mean control direction of the segment, used to place the initial
    // center ahead of the last observed position.
    let mut dir = alloc::vec![0.0; dim];
    for s in near_samples {
        for (d, u) in dir.iter_mut().zip(&s.u) {
            *d += u;
        }
    }
    let dir_norm = fmath::hypot_slice(&dir);
    if dir_norm > 0.0 {
        for d in &mut dir {
            *d /= dir_norm;
        }
    }

    let mut iters = Vec::new();
    let mut warm: Option<(f64, Point)> = None;
    for n in 3..=near_samples.len() {
        let prefix = &near_samples[..n];
        let (sigma0, x00) = match &warm {
            Some((s, p)) => (*s, p.clone()),
            None => {
                let covered = prefix[0].z.distance(&prefix[n - 1].z).max(1e-3);
                let sigma0 = cfg.sigma_init.unwrap_or(covered);
                let r0 = cfg.r0_init.unwrap_or(2.0 * covered);
                let last = &prefix[n - 1].z;
                let x00 = Point::new(
                    last.coords.iter().zip(&dir).map(|(c, d)| c + r0 * d).collect(),
                );
                (sigma0, x00)
            }
        };
        let j_start = objective(sigma0, &x00, beta, alpha, prefix);
        let (sigma, x0, j) = descend(sigma0, x00, beta, alpha, prefix, cfg);
        warm = Some((sigma, x0.clone()));
        if j.is_finite() && j <= 10.0 * j_start.max(1e-300) {
            iters.push(FitIteration {
                q: iters.len(),
                n_samples: n,
                x0_hat: x0,
                sigma_hat: sigma,
                j_value: j,
            });
        }
    }
    Ok(iters)
}

/// Weighted fusion across prefix estimates: sample-count weight times
/// inverse-error weight, renormalized to sum one.
pub fn fuse_estimates(iters: &[FitIteration]) -> Result<(Point, f64)> {
    if iters.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let max_n = iters.iter().map(|i| i.n_samples).max().expect("non-empty") as f64;
    let min_j = iters.iter().map(|i| i.j_value).fold(f64::INFINITY, f64::min);
    let dim = iters[0].x0_hat.dim();

    let mut w_sum = 0.0;
    let mut x0 = alloc::vec![0.0; dim];
    let mut sigma = 0.0;
    for it in iters {
        let w1 = it.n_samples as f64 / max_n;
        let w2 = min_j / it.j_value.max(1e-12);
        let w = w1 * w2;
        w_sum += w;
        for (acc, c) in x0.iter_mut().zip(&it.x0_hat.coords) {
            *acc += w * c;
        }
        sigma += w * it.sigma_hat;
    }
    for c in &mut x0 {
        *c /= w_sum;
    }
    Ok((Point::new(x0), sigma / w_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(z: [f64; 2], u: [f64; 2], k: u64) -> ControlSample {
        ControlSample { z: Point::from(&z[..]), u: u.to_vec(), k }
    }

    #[test]
    fn beta_alpha_direct_read() {
        assert_eq!(estimate_beta_alpha(&[5.0, 4.0, 3.0], 0), (5.0, 5.0));
        assert_eq!(estimate_beta_alpha(&[0.09, 0.08], 0), (0.09, 0.09));
    }

    #[test]
    fn objective_zero_on_exact_samples() {
        let x0 = Point::from(&[0.0, 0.0][..]);
        let speed = 1.0 - (-1.0f64).exp();
        let samples = vec![
            sample([1.0, 0.0], [-speed, 0.0], 0),
            sample([1.0, 0.0], [-speed, 0.0], 1),
        ];
        assert!(objective(1.0, &x0, 1.0, 1.0, &samples) < 1e-30);
    }

    #[test]
    fn objective_hand_residual() {
        let x0 = Point::from(&[0.0, 0.0][..]);
        let samples = vec![
            sample([1.0, 0.0], [-1.0, 0.0], 0),
            sample([1.0, 0.0], [-1.0, 0.0], 1),
        ];
        let expected = (-2.0f64).exp();
        assert!((objective(1.0, &x0, 1.0, 1.0, &samples) - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_global_minimum() {
        let x0 = Point::from(&[0.3, -0.2][..]);
        let true_sigma = 0.8;
        let samples: Vec<_> = (0..8)
            .map(|k| {
                let z = [0.3 + 0.2 * k as f64, -0.2 + 0.1 * k as f64];
                let r = Point::from(&z[..]).distance(&x0);
                let speed = 1.0 - (-(r * r) / (true_sigma * true_sigma)).exp();
                sample(z, [speed, 0.0], k as u64)
            })
            .collect();
        let (ds, dx) = gradient(true_sigma, &x0, 1.0, 1.0, &samples);
        assert!(grad_norm(ds, &dx) < 1e-10);
    }

    #[test]
    fn gradient_zero_for_symmetric_samples() {
        let x0 = Point::from(&[0.0, 0.0][..]);
        let samples = vec![
            sample([1.0, 0.0], [0.5, 0.0], 0),
            sample([-1.0, 0.0], [0.5, 0.0], 1),
            sample([0.0, 1.0], [0.5, 0.0], 2),
            sample([0.0, -1.0], [0.5, 0.0], 3),
        ];
        let (_, dx) = gradient(1.0, &x0, 1.0, 1.0, &samples);
        assert!(dx[0].abs() < 1e-14 && dx[1].abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x0 = Point::from(&[0.4, 0.7][..]);
        let sigma = 0.9;
        let samples: Vec<_> = (0..5)
            .map(|k| sample([0.1 * k as f64, 0.3 - 0.05 * k as f64], [0.2 + 0.01 * k as f64, 0.1], k as u64))
            .collect();
        let (ds, dx) = gradient(sigma, &x0, 1.0, 1.0, &samples);
        let h = 1e-6;
        let fd_s = (objective(sigma + h, &x0, 1.0, 1.0, &samples)
            - objective(sigma - h, &x0, 1.0, 1.0, &samples))
            / (2.0 * h);
        assert!((ds - fd_s).abs() <= 1e-5 * fd_s.abs().max(1e-9), "{ds} vs {fd_s}");
        for axis in 0..2 {
            let mut plus = x0.clone();
            plus.coords[axis] += h;
            let mut minus = x0.clone();
            minus.coords[axis] -= h;
            let fd = (objective(sigma, &plus, 1.0, 1.0, &samples)
                - objective(sigma, &minus, 1.0, 1.0, &samples))
                / (2.0 * h);
            assert!((dx[axis] - fd).abs() <= 1e-5 * fd.abs().max(1e-9));
        }
    }

    fn noiseless_approach(x0: [f64; 2], sigma: f64, beta: f64) -> Vec<ControlSample> {
        // Straight-line approach along +x toward the center.
        let mut out = Vec::new();
        let center = Point::from(&x0[..]);
        let mut pos = [x0[0] - 2.5 * sigma, x0[1]];
        for k in 0..40 {
            let p = Point::from(&pos[..]);
            let r = p.distance(&center);
            if r < 0.02 {
                break;
            }
            let speed = beta * (1.0 - (-(r * r) / (sigma * sigma)).exp());
            out.push(sample(pos, [speed, 0.0], k));
            pos[0] += speed;
        }
        out
    }

    #[test]
    fn fit_recovers_generator_parameters() {
        let samples = noiseless_approach([1.0, 0.5], 0.6, 0.4);
        let iters = fit_segment(&samples, 0.4, 0.4, &FitterConfig::default()).unwrap();
        let last = iters.last().unwrap();
        assert!(last.j_value < 1e-8, "final J = {}", last.j_value);
        let (x0, sigma) = fuse_estimates(&iters).unwrap();
        assert!((x0.coords[0] - 1.0).abs() < 1e-2, "x0 = {:?}", x0);
        assert!((sigma - 0.6).abs() < 2e-2, "sigma = {sigma}");
    }

    #[test]
    fn three_samples_give_one_iteration() {
        let samples = noiseless_approach([1.0, 0.0], 0.5, 0.3);
        let iters = fit_segment(&samples[..3], 0.3, 0.3, &FitterConfig::default()).unwrap();
        assert_eq!(iters.len(), 1);
        assert_eq!(iters[0].n_samples, 3);
    }

    #[test]
    fn fuse_identical_iterations_is_identity() {
        let it = FitIteration {
            q: 0,
            n_samples: 5,
            x0_hat: Point::from(&[1.0, 2.0][..]),
            sigma_hat: 0.7,
            j_value: 0.01,
        };
        let (x0, sigma) = fuse_estimates(&[it.clone(), it.clone(), it]).unwrap();
        assert_eq!(x0.coords, vec![1.0, 2.0]);
        assert!((sigma - 0.7).abs() < 1e-15);
    }

    #[test]
    fn fuse_equal_weights_is_plain_average() {
        let a = FitIteration {
            q: 0,
            n_samples: 4,
            x0_hat: Point::from(&[0.0, 0.0][..]),
            sigma_hat: 1.0,
            j_value: 1.0,
        };
        let b = FitIteration {
            q: 1,
            n_samples: 4,
            x0_hat: Point::from(&[2.0, 2.0][..]),
            sigma_hat: 3.0,
            j_value: 1.0,
        };
        let (x0, sigma) = fuse_estimates(&[a, b]).unwrap();
        assert_eq!(x0.coords, vec![1.0, 1.0]);
        assert_eq!(sigma, 2.0);
    }

    #[test]
    fn fuse_hand_weight_arithmetic() {
        let a = FitIteration {
            q: 0,
            n_samples: 10,
            x0_hat: Point::from(&[0.0][..]),
            sigma_hat: 2.0,
            j_value: 0.01,
        };
        let b = FitIteration {
            q: 1,
            n_samples: 5,
            x0_hat: Point::from(&[0.0][..]),
            sigma_hat: 4.0,
            j_value: 0.1,
        };
        let (_, sigma) = fuse_estimates(&[a, b]).unwrap();
        assert!((sigma - (2.0 + 0.05 * 4.0) / 1.05).abs() < 1e-12);
    }

    #[test]
    fn fuse_empty_is_error() {
        assert!(fuse_estimates(&[]).is_err());
    }
}
