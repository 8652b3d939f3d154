//! The switching attractive-field model: a parametric near-range
//! deceleration law, a log-normal far-range speed law, and the near/far
//! phase classifier.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::traj::Point;

/// Parameters of one attractive field in its near range of interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldParams {
    /// Top speed (length/sample).
    pub beta: f64,
    /// Arrival deceleration amplitude (length/sample).
    pub alpha: f64,
    /// Center of force.
    pub x0: Point,
    /// Shape scale (length).
    pub sigma: f64,
}

/// Log-normal speed law governing the far range of interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldParams {
    /// Location of the log speed.
    pub mu_log: f64,
    /// Scale of the log speed.
    pub sigma_far: f64,
}

/// The full switching effect of one attractive area.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingField {
    pub near: NearFieldParams,
    pub far: FarFieldParams,
    /// Radius at which the model switches between regimes.
    pub r_switch: f64,
}

/// Speed of the near-range law at distance `r` from the center:
/// `beta - alpha * exp(-r^2 / sigma^2)`.
pub fn eval_near_speed(p: &NearFieldParams, r: f64) -> f64 {
    p.beta - p.alpha * fmath::exp(-(r * r) / (p.sigma * p.sigma))
}

/// The field velocity at a point: radial toward the center, with the
/// near law inside `r_switch` and the far-range median speed outside.
/// Exactly at the center the direction is undefined and the field is zero.
pub fn eval_field(f: &SwitchingField, x: &Point) -> Vec<f64> {
    let n = x.dim();
    let r = x.distance(&f.near.x0);
    if r == 0.0 {
        return alloc::vec![0.0; n];
    }
    let speed = if r <= f.r_switch {
        eval_near_speed(&f.near, r)
    } else {
        fmath::exp(f.far.mu_log)
    };
    x.coords
        .iter()
        .zip(&f.near.x0.coords)
        .map(|(xi, ci)| speed * (ci - xi) / r)
        .collect()
}

/// Maximum-likelihood log-normal fit of a speed sample: mean and
/// population standard deviation of the log speeds. Speeds below 1e-9
/// are floored to keep the logs finite.
pub fn fit_far_lognormal(speeds: &[f64]) -> Result<FarFieldParams> {
    if speeds.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: speeds.len() });
    }
    let n = speeds.len() as f64;
    let logs: Vec<f64> = speeds.iter().map(|&s| fmath::ln(s.max(1e-9))).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    Ok(FarFieldParams { mu_log: mu, sigma_far: fmath::sqrt(var) })
}

/// Finds the first index at which the speeds strictly decrease (relative
/// margin 1e-3) for `dk_switch` consecutive steps; samples before it are
/// far-range, from it on near-range.
pub fn classify_phase(segment_speeds: &[f64], dk_switch: usize) -> Option<usize> {
    if dk_switch == 0 || segment_speeds.len() < dk_switch + 1 {
        return None;
    }
    'outer: for i in 0..segment_speeds.len() - dk_switch {
        for j in i..i + dk_switch {
            if segment_speeds[j + 1] >= segment_speeds[j] * (1.0 - 1e-3) {
                continue 'outer;
            }
        }
        return Some(i);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(beta: f64, alpha: f64, sigma2: f64, x0: [f64; 2]) -> NearFieldParams {
        NearFieldParams { beta, alpha, x0: Point::from(&x0[..]), sigma: sigma2.sqrt() }
    }

    #[test]
    fn near_speed_zero_at_center_when_alpha_equals_beta() {
        let p = near(1.0, 1.0, 15.0, [0.0, 0.0]);
        assert_eq!(eval_near_speed(&p, 0.0), 0.0);
    }

    #[test]
    fn near_speed_asymptote_is_beta() {
        let p = near(1.0, 1.0, 2.0, [0.0, 0.0]);
        assert!((eval_near_speed(&p, 1e6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_speed_scalar_evaluation() {
        // beta = alpha = 0.108, sigma^2 = 0.2, r = 0.3.
        let p = near(0.108, 0.108, 0.2, [0.0, 0.0]);
        let expected = 0.108 * (1.0 - (-0.45f64).exp());
        assert!((eval_near_speed(&p, 0.3) - expected).abs() < 1e-12);
        assert!((expected - 0.0391).abs() < 1e-3);
    }

    fn switching(beta: f64, sigma: f64, x0: [f64; 2], r_switch: f64) -> SwitchingField {
        SwitchingField {
            near: NearFieldParams { beta, alpha: beta, x0: Point::from(&x0[..]), sigma },
            far: FarFieldParams { mu_log: beta.ln(), sigma_far: 0.1 },
            r_switch,
        }
    }

    #[test]
    fn field_zero_at_center() {
        let f = switching(1.0, 5.0, [0.0, 0.0], 10.0);
        assert_eq!(eval_field(&f, &Point::from(&[0.0, 0.0][..])), alloc::vec![0.0, 0.0]);
    }

    #[test]
    fn field_far_branch_magnitude() {
        let f = switching(0.7, 1.0, [0.0, 0.0], 2.0);
        let v = eval_field(&f, &Point::from(&[2.001, 0.0][..]));
        let mag = crate::fmath::hypot_slice(&v);
        assert!((mag - f.far.mu_log.exp()).abs() < 1e-12);
        assert!(v[0] < 0.0);
    }

    #[test]
    fn field_hand_evaluation() {
        let f = switching(1.0, 5.0, [0.0, 0.0], 10.0);
        let v = eval_field(&f, &Point::from(&[3.0, 4.0][..]));
        let mag = crate::fmath::hypot_slice(&v);
        assert!((mag - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((v[0] / mag + 0.6).abs() < 1e-12);
        assert!((v[1] / mag + 0.8).abs() < 1e-12);
    }

    #[test]
    fn lognormal_degenerate() {
        let e = core::f64::consts::E;
        let p = fit_far_lognormal(&[e, e, e]).unwrap();
        assert!((p.mu_log - 1.0).abs() < 1e-12);
        assert!(p.sigma_far < 1e-12);
    }

    #[test]
    fn lognormal_hand_arithmetic() {
        let p = fit_far_lognormal(&[1.0, core::f64::consts::E.powi(2)]).unwrap();
        assert!((p.mu_log - 1.0).abs() < 1e-12);
        assert!((p.sigma_far - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lognormal_needs_two_samples() {
        assert!(fit_far_lognormal(&[1.0]).is_err());
    }

    #[test]
    fn classify_constant_speeds() {
        assert_eq!(classify_phase(&[5.0, 5.0, 5.0, 5.0], 3), None);
    }

    #[test]
    fn classify_hand_scan() {
        assert_eq!(classify_phase(&[5.0, 5.0, 4.0, 3.0, 2.0, 1.0], 3), Some(1));
    }

    #[test]
    fn classify_increasing_speeds() {
        assert_eq!(classify_phase(&[1.0, 2.0, 3.0, 4.0, 5.0], 3), None);
    }
}
