//! Von Mises estimation, interval probability and the angular
//! Mahalanobis distance used by the segmenter gate.

use crate::error::{Error, Result};
use crate::fmath;

pub const TAU: f64 = core::f64::consts::TAU;
pub const PI: f64 = core::f64::consts::PI;

/// Concentration cap for numerically collinear windows.
pub const KAPPA_MAX: f64 = 1e4;

/// Mean direction and concentration of a circular sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesEstimate {
    /// Mean direction, wrapped to (-pi, pi].
    pub mu: f64,
    /// Concentration; zero for a uniform sample, capped at [`KAPPA_MAX`].
    pub kappa: f64,
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Maximum-resultant fit of (mu, kappa). Kappa uses the standard
/// three-regime rational approximation of the inverse of A(kappa) = Rbar
/// (Fisher form), capped at [`KAPPA_MAX`].
pub fn estimate_von_mises(angles: &[f64]) -> Result<VonMisesEstimate> {
    if angles.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: angles.len() });
    }
    let n = angles.len() as f64;
    let c: f64 = angles.iter().map(|&a| fmath::cos(a)).sum::<f64>() / n;
    let s: f64 = angles.iter().map(|&a| fmath::sin(a)).sum::<f64>() / n;
    let r_bar = fmath::sqrt(c * c + s * s);
    if r_bar < 1e-12 {
        // Perfectly balanced resultant: uniform direction.
        return Ok(VonMisesEstimate { mu: 0.0, kappa: 0.0 });
    }
    let mu = wrap_angle(fmath::atan2(s, c));
    let r2 = r_bar * r_bar;
    let r3 = r2 * r_bar;
    let kappa = if r_bar < 0.53 {
        2.0 * r_bar + r3 + 5.0 * r3 * r2 / 6.0
    } else if r_bar < 0.85 {
        -0.4 + 1.39 * r_bar + 0.43 / (1.0 - r_bar)
    } else {
        let denom = r3 - 4.0 * r2 + 3.0 * r_bar;
        if denom <= 0.0 {
            KAPPA_MAX
        } else {
            1.0 / denom
        }
    };
    Ok(VonMisesEstimate { mu, kappa: kappa.min(KAPPA_MAX) })
}

/// Exponentially scaled modified Bessel function `I0(x) * exp(-x)`,
/// Abramowitz & Stegun 9.8.1/9.8.2. The scaling keeps the von Mises
/// normalization finite up to the kappa cap.
fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = fmath::abs(x);
    if ax < 3.75 {
        let y = (x / 3.75) * (x / 3.75);
        let i0 = 1.0
            + y * (3.5156229
                + y * (3.0899424
                    + y * (1.2067492 + y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))));
        i0 * fmath::exp(-ax)
    } else {
        let z = 3.75 / ax;
        (0.39894228
            + z * (0.1328592e-1
                + z * (0.225319e-2
                    + z * (-0.157565e-2
                        + z * (0.916281e-2
                            + z * (-0.2057706e-1
                                + z * (0.2635537e-1
                                    + z * (-0.1647633e-1 + z * 0.392377e-2))))))))
            / fmath::sqrt(ax)
    }
}

/// Scaled von Mises density factor `exp(kappa * (cos(t) - 1))`; the true
/// density at `mu + t` is this over `2 pi * I0(kappa) * exp(-kappa)`.
fn scaled_kernel(kappa: f64, t: f64) -> f64 {
    fmath::exp(kappa * (fmath::cos(t) - 1.0))
}

fn adaptive_simpson(kappa: f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = scaled_kernel(kappa, lm);
    let frm = scaled_kernel(kappa, rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || fmath::abs(delta) <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson(kappa, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson(kappa, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Probability mass of the estimate over `[mu - half_width, mu + half_width]`,
/// by adaptive quadrature with absolute error below 1e-6.
pub fn von_mises_interval_mass(est: &VonMisesEstimate, half_width: f64) -> f64 {
    assert!(half_width > 0.0 && half_width <= PI, "half_width in (0, pi]");
    let kappa = est.kappa;
    let norm = TAU * bessel_i0_scaled(kappa);
    // Integrate the scaled kernel symmetrically around the mean.
    let (a, b) = (-half_width, half_width);
    let fa = scaled_kernel(kappa, a);
    let fb = scaled_kernel(kappa, b);
    let fm = scaled_kernel(kappa, 0.0);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let integral = adaptive_simpson(kappa, a, b, fa, fm, fb, whole, 1e-8 * norm, 40);
    (integral / norm).clamp(0.0, 1.0)
}

/// Angular Mahalanobis distance: wrapped deviation over the effective
/// standard deviation `1 / sqrt(kappa)`. Zero concentration means a
/// uniform estimate, with which every angle is compatible.
pub fn mahalanobis_angle(theta: f64, est: &VonMisesEstimate) -> f64 {
    if est.kappa == 0.0 {
        return 0.0;
    }
    fmath::abs(wrap_angle(theta - est.mu)) * fmath::sqrt(est.kappa)
}

/// Von Mises density, exposed for debugging dumps and test oracles.
pub fn von_mises_pdf(est: &VonMisesEstimate, theta: f64) -> f64 {
    scaled_kernel(est.kappa, wrap_angle(theta - est.mu)) / (TAU * bessel_i0_scaled(est.kappa))
}

/// Draws from a von Mises distribution (Best & Fisher 1979). Used by the
/// simulator-independent statistical checks; seeded by the caller.
pub fn sample_von_mises<R: rand::Rng>(mu: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-9 {
        return wrap_angle(rng.gen_range(-PI..PI));
    }
    let tau = 1.0 + fmath::sqrt(1.0 + 4.0 * kappa * kappa);
    let rho = (tau - fmath::sqrt(2.0 * tau)) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.gen_range(0.0..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = fmath::cos(PI * u1);
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || fmath::ln(c / u2) + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen_range(0.0..1.0);
            let sign = if u3 > 0.5 { 1.0 } else { -1.0 };
            return wrap_angle(mu + sign * fmath::acos(f));
        }
    }
}

/// Collects the angular component of a slice of angles (helper for the
/// segmenter's debug dump).
pub fn mean_resultant_length(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let n = angles.len() as f64;
    let c: f64 = angles.iter().map(|&a| fmath::cos(a)).sum::<f64>() / n;
    let s: f64 = angles.iter().map(|&a| fmath::sin(a)).sum::<f64>() / n;
    fmath::sqrt(c * c + s * s)
}

#[allow(unused_imports)]
use alloc::vec;
