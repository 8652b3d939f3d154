//! Random-walk Kalman filter producing innovations and control velocities.
//!
//! The dynamic matrix keeps the position block and zeroes the velocity
//! block, so the prediction is "the agent stays where it was". Whatever
//! the agent actually did shows up in the innovation, which divided by the
//! sample interval is the environment-induced control velocity.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::traj::{ControlSample, Point, Trajectory};

/// Noise and dimension configuration shared by every filter pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Spatial dimension n; the state is 2n (position; velocity).
    pub n: usize,
    /// Process-noise variance per position axis.
    pub q_pos: f64,
    /// Process-noise variance per velocity axis.
    pub q_vel: f64,
    /// Measurement-noise variance per axis.
    pub r_meas: f64,
    /// Initial covariance scale (P0 = p0 * I).
    pub p0: f64,
    /// Sample interval; normalized to one sample.
    pub dk: f64,
}

impl FilterConfig {
    pub fn new(n: usize) -> Self {
        FilterConfig { n, q_pos: 0.01, q_vel: 0.01, r_meas: 1e-4, p0: 1.0, dk: 1.0 }
    }

    /// Transition matrix: identity on the position block, zero elsewhere.
    pub fn transition(&self) -> Mat {
        let mut f = Mat::zeros(2 * self.n, 2 * self.n);
        for i in 0..self.n {
            f[(i, i)] = 1.0;
        }
        f
    }

    pub fn process_noise(&self) -> Mat {
        let n = self.n;
        let mut q = Mat::zeros(2 * n, 2 * n);
        for i in 0..n {
            q[(i, i)] = self.q_pos;
            q[(n + i, n + i)] = self.q_vel;
        }
        q
    }
}

/// Filter mean and covariance over the stacked [position; velocity] state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: Vec<f64>,
    pub cov: Mat,
}

impl FilterState {
    /// State pinned at a first observation: zero velocity, p0 * I covariance.
    pub fn init(z: &Point, cfg: &FilterConfig) -> Self {
        let n = cfg.n;
        let mut mean = vec![0.0; 2 * n];
        mean[..n].copy_from_slice(&z.coords);
        let mut cov = Mat::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            cov[(i, i)] = cfg.p0;
        }
        FilterState { mean, cov }
    }

    pub fn position(&self, n: usize) -> &[f64] {
        &self.mean[..n]
    }
}

/// Measurement residual with its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub y: Vec<f64>,
    pub s_cov: Mat,
    pub k: u64,
}

/// Time update: position persists, velocity prediction is zero,
/// covariance becomes `F P F' + Q`.
pub fn predict_rw(state: &FilterState, cfg: &FilterConfig) -> FilterState {
    let n = cfg.n;
    let mut mean = vec![0.0; 2 * n];
    mean[..n].copy_from_slice(&state.mean[..n]);

    // F P F' keeps only the position block of P; add Q.
    let mut cov = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = state.cov[(i, j)];
        }
        cov[(i, i)] += cfg.q_pos;
        cov[(n + i, n + i)] = cfg.q_vel;
    }
    FilterState { mean, cov }
}

/// Measurement residual `y = z - H x` and its covariance `S = H P H' + R`.
pub fn innovate(state_pred: &FilterState, z: &Point, k: u64, cfg: &FilterConfig) -> Result<Innovation> {
    let n = cfg.n;
    if z.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.dim() });
    }
    let y: Vec<f64> = z
        .coords
        .iter()
        .zip(&state_pred.mean[..n])
        .map(|(zi, xi)| zi - xi)
        .collect();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = state_pred.cov[(i, j)];
        }
        s[(i, i)] += cfg.r_meas;
    }
    Ok(Innovation { y, s_cov: s, k })
}

/// Measurement update with gain `K = P H' S^-1`; covariance stays
/// symmetric PSD (re-symmetrized against rounding drift).
pub fn update(state_pred: &FilterState, inn: &Innovation, cfg: &FilterConfig) -> Result<FilterState> {
    let n = cfg.n;
    let s_inv = inn.s_cov.inverse()?;

    // P H' is the first-n-columns block of P.
    let mut pht = Mat::zeros(2 * n, n);
    for i in 0..2 * n {
        for j in 0..n {
            pht[(i, j)] = state_pred.cov[(i, j)];
        }
    }
    let k_gain = pht.mul(&s_inv);

    let mut mean = state_pred.mean.clone();
    let ky = k_gain.mul_vec(&inn.y);
    for (m, d) in mean.iter_mut().zip(&ky) {
        *m += d;
    }

    // (I - K H) P: K H only touches the first n columns of the factor.
    let mut ikh = Mat::identity(2 * n);
    for i in 0..2 * n {
        for j in 0..n {
            ikh[(i, j)] -= k_gain[(i, j)];
        }
    }
    let mut cov = ikh.mul(&state_pred.cov);
    cov.symmetrize();
    Ok(FilterState { mean, cov })
}

/// Control velocity `u = y / dk` valid at the innovating measurement.
pub fn extract_control(inn: &Innovation, cfg: &FilterConfig) -> Vec<f64> {
    inn.y.iter().map(|yi| yi / cfg.dk).collect()
}

/// Runs the random-walk filter over one trajectory, emitting one control
/// sample per observation after the first. The filter is re-initialized
/// per trajectory; no state carries across agents.
pub fn run_rw_pass(t: &Trajectory, cfg: &FilterConfig) -> Result<Vec<ControlSample>> {
    if t.dim() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: t.dim() });
    }
    let mut state = FilterState::init(&t.observations[0].z, cfg);
    let mut out = Vec::with_capacity(t.len() - 1);
    for obs in &t.observations[1..] {
        let pred = predict_rw(&state, cfg);
        let inn = innovate(&pred, &obs.z, obs.k, cfg)?;
        let u = extract_control(&inn, cfg);
        out.push(ControlSample { z: obs.z.clone(), u, k: obs.k });
        state = update(&pred, &inn, cfg)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmath;
    use alloc::string::ToString;
    use crate::traj::Observation;

    fn cfg2() -> FilterConfig {
        FilterConfig::new(2)
    }

    #[test]
    fn predict_zeroes_velocity() {
        let cfg = cfg2();
        let state = FilterState {
            mean: vec![3.0, 4.0, 1.0, 1.0],
            cov: Mat::identity(4),
        };
        let pred = predict_rw(&state, &cfg);
        assert_eq!(pred.mean, vec![3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn predict_pure_process_noise() {
        let cfg = cfg2();
        let state = FilterState { mean: vec![0.0; 4], cov: Mat::zeros(4, 4) };
        let pred = predict_rw(&state, &cfg);
        for i in 0..2 {
            assert_eq!(pred.cov[(i, i)], cfg.q_pos);
            assert_eq!(pred.cov[(2 + i, 2 + i)], cfg.q_vel);
        }
    }

    #[test]
    fn predict_cov_matches_hand_product() {
        // F I F' + Q for n = 2, written out by hand: identity on the
        // position block plus Q everywhere on the diagonal.
        let cfg = cfg2();
        let state = FilterState { mean: vec![0.0; 4], cov: Mat::identity(4) };
        let pred = predict_rw(&state, &cfg);
        let f = cfg.transition();
        let oracle = f.mul(&Mat::identity(4)).mul(&f.transpose()).add(&cfg.process_noise());
        for i in 0..4 {
            for j in 0..4 {
                assert!((pred.cov[(i, j)] - oracle[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn innovation_zero_on_perfect_prediction() {
        let cfg = cfg2();
        let state = FilterState { mean: vec![1.0, 2.0, 0.0, 0.0], cov: Mat::identity(4) };
        let inn = innovate(&state, &Point::from(&[1.0, 2.0][..]), 1, &cfg).unwrap();
        assert_eq!(inn.y, vec![0.0, 0.0]);
    }

    #[test]
    fn innovation_direct_subtraction() {
        let cfg = cfg2();
        let state = FilterState { mean: vec![0.0, 0.0, 0.0, 0.0], cov: Mat::identity(4) };
        let inn = innovate(&state, &Point::from(&[0.2, 0.0][..]), 1, &cfg).unwrap();
        assert_eq!(inn.y, vec![0.2, 0.0]);
    }

    #[test]
    fn innovation_cov_hand_sum() {
        let mut cfg = cfg2();
        cfg.r_meas = 0.01;
        let state = FilterState { mean: vec![0.0; 4], cov: Mat::identity(4) };
        let inn = innovate(&state, &Point::from(&[0.0, 0.0][..]), 1, &cfg).unwrap();
        for i in 0..2 {
            assert!((inn.s_cov[(i, i)] - 1.01).abs() < 1e-15);
        }
    }

    #[test]
    fn update_zero_innovation_keeps_mean() {
        let cfg = cfg2();
        let state = FilterState { mean: vec![1.0, 2.0, 0.0, 0.0], cov: Mat::identity(4) };
        let inn = innovate(&state, &Point::from(&[1.0, 2.0][..]), 1, &cfg).unwrap();
        let post = update(&state, &inn, &cfg).unwrap();
        assert_eq!(post.mean, state.mean);
    }

    #[test]
    fn update_ignores_measurement_at_huge_r() {
        let mut cfg = cfg2();
        cfg.r_meas = 1e12;
        let state = FilterState { mean: vec![0.0; 4], cov: Mat::identity(4) };
        let inn = innovate(&state, &Point::from(&[5.0, -3.0][..]), 1, &cfg).unwrap();
        let post = update(&state, &inn, &cfg).unwrap();
        for m in &post.mean {
            assert!(m.abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_kalman_algebra() {
        // n = 1, P = 1, R = 1: K = 0.5 and posterior variance 0.5.
        let cfg = FilterConfig { n: 1, q_pos: 0.0, q_vel: 0.0, r_meas: 1.0, p0: 1.0, dk: 1.0 };
        let mut state = FilterState { mean: vec![0.0, 0.0], cov: Mat::zeros(2, 2) };
        state.cov[(0, 0)] = 1.0;
        let inn = innovate(&state, &Point::from(&[1.0][..]), 1, &cfg).unwrap();
        let post = update(&state, &inn, &cfg).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-12);
        assert!((post.cov[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn extract_control_divides_by_dk() {
        let mut cfg = cfg2();
        cfg.dk = 0.5;
        let inn = Innovation { y: vec![1.0, 2.0], s_cov: Mat::identity(2), k: 1 };
        assert_eq!(extract_control(&inn, &cfg), vec![2.0, 4.0]);
    }

    fn line(points: Vec<[f64; 2]>) -> Trajectory {
        let obs = points
            .into_iter()
            .enumerate()
            .map(|(k, p)| Observation { k: k as u64, z: Point::from(&p[..]) })
            .collect();
        Trajectory::new("line".to_string(), obs).unwrap()
    }

    #[test]
    fn stationary_controls_vanish() {
        let t = line(vec![[2.0, 2.0]; 12]);
        let samples = run_rw_pass(&t, &cfg2()).unwrap();
        assert_eq!(samples.len(), 11);
        for s in &samples[3..] {
            assert!(s.speed() < 1e-12);
        }
    }

    #[test]
    fn constant_velocity_control_converges() {
        let v = [1.0, 0.0];
        let t = line((0..40).map(|k| [k as f64 * v[0], k as f64 * v[1]]).collect());
        let samples = run_rw_pass(&t, &cfg2()).unwrap();
        for s in &samples[3..] {
            let err = fmath::hypot_slice(&[s.u[0] - v[0], s.u[1] - v[1]]);
            assert!(err < 0.01, "err {err} at k {}", s.k);
        }
    }

    #[test]
    fn output_length_is_len_minus_one() {
        let t = line(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]]);
        assert_eq!(run_rw_pass(&t, &cfg2()).unwrap().len(), 2);
    }

    #[test]
    fn covariance_stays_symmetric() {
        let t = line((0..50).map(|k| [(k as f64).sin(), (k as f64 * 0.3).cos()]).collect());
        let cfg = cfg2();
        let mut state = FilterState::init(&t.observations[0].z, &cfg);
        for obs in &t.observations[1..] {
            let pred = predict_rw(&state, &cfg);
            assert!(pred.cov.max_asymmetry() < 1e-9);
            let inn = innovate(&pred, &obs.z, obs.k, &cfg).unwrap();
            state = update(&pred, &inn, &cfg).unwrap();
            assert!(state.cov.max_asymmetry() < 1e-9);
        }
    }
}
