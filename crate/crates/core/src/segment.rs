//! Online partition of a control-sample stream into quasilinear segments.
//!
//! The machine buffers samples until a window of `a` orientations fits a
//! von Mises distribution concentrated enough that the mass over
//! `mu +- theta_dev` exceeds the accumulated-probability bound. A segment
//! then stays open while new orientations pass the Mahalanobis gate, and
//! closes after `n_theta` consecutive rejections; the rejected tail seeds
//! the next window.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::traj::ControlSample;
use crate::vonmises::{estimate_von_mises, mahalanobis_angle, von_mises_interval_mass, VonMisesEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterConfig {
    /// Minimum window size in samples.
    pub a: usize,
    /// Tolerance half-angle around the estimated mean direction, radians.
    pub theta_dev: f64,
    /// Mahalanobis gate threshold.
    pub d_theta: f64,
    /// Consecutive-outlier budget before a segment closes.
    pub n_theta: usize,
    /// Accumulated-probability bound for opening a segment.
    pub cdf_threshold: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig { a: 6, theta_dev: 0.6, d_theta: 3.0, n_theta: 4, cdf_threshold: 0.9 }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> bool {
        self.a >= 3
            && self.theta_dev > 0.0
            && self.theta_dev < core::f64::consts::PI
            && self.d_theta > 0.0
            && self.n_theta >= 1
            && self.cdf_threshold > 0.0
            && self.cdf_threshold < 1.0
    }
}

/// A maximal run of control samples with stable orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub s: usize,
    pub i_start: u64,
    pub i_end: u64,
    pub samples: Vec<ControlSample>,
    pub direction: VonMisesEstimate,
}

struct OpenSegment {
    angles: Vec<f64>,
    samples: Vec<ControlSample>,
    est: VonMisesEstimate,
    /// Current run of consecutively rejected samples.
    pending: Vec<(f64, ControlSample)>,
}

/// Sequential segmentation state machine; one instance per trajectory.
pub struct Segmenter {
    cfg: SegmenterConfig,
    window: VecDeque<(f64, ControlSample)>,
    open: Option<OpenSegment>,
    next_id: usize,
}

impl Segmenter {
    pub fn new(cfg: SegmenterConfig) -> Self {
        assert!(cfg.validate(), "invalid segmenter configuration");
        Segmenter { cfg, window: VecDeque::new(), open: None, next_id: 0 }
    }

    /// Feeds one control sample; returns any segment closed by it.
    pub fn push(&mut self, sample: ControlSample) -> Option<Segment> {
        debug_assert!(sample.u.len() >= 2, "orientation needs at least two axes");
        let angle = sample.angle();
        let mut closed = None;
        if self.open.is_some() {
            closed = self.gate(angle, sample);
        } else {
            self.window.push_back((angle, sample));
        }
        self.try_open();
        closed
    }

    /// Ends the stream, closing any open segment.
    pub fn finish(&mut self) -> Option<Segment> {
        self.window.clear();
        self.open.take().map(|open| self.emit(open))
    }

    fn gate(&mut self, angle: f64, sample: ControlSample) -> Option<Segment> {
        let cfg_d = self.cfg.d_theta;
        let open = self.open.as_mut().expect("gate requires an open segment");
        if mahalanobis_angle(angle, &open.est) < cfg_d {
            Self::accept(open, angle, sample, cfg_d);
            None
        } else {
            open.pending.push((angle, sample));
            if open.pending.len() >= self.cfg.n_theta {
                let mut open = self.open.take().expect("just checked");
                // The rejected tail seeds the next window.
                for p in open.pending.drain(..) {
                    self.window.push_back(p);
                }
                Some(self.emit(open))
            } else {
                None
            }
        }
    }

    fn accept(open: &mut OpenSegment, angle: f64, sample: ControlSample, d_theta: f64) {
        open.angles.push(angle);
        open.samples.push(sample);
        open.est = estimate_von_mises(&open.angles).expect("segment holds >= 2 samples");
        // Earlier rejects are re-tested against the refreshed estimate;
        // any that still fail are dropped as outliers, resetting the streak.
        let pending = core::mem::take(&mut open.pending);
        for (a, s) in pending {
            if mahalanobis_angle(a, &open.est) < d_theta {
                open.angles.push(a);
                open.samples.push(s);
                open.est = estimate_von_mises(&open.angles).expect("non-empty");
            }
        }
    }

    fn try_open(&mut self) {
        while self.open.is_none() && self.window.len() >= self.cfg.a {
            let angles: Vec<f64> = self.window.iter().take(self.cfg.a).map(|(a, _)| *a).collect();
            let est = estimate_von_mises(&angles).expect("window holds >= 3 samples");
            let mass = von_mises_interval_mass(&est, self.cfg.theta_dev);
            if mass > self.cfg.cdf_threshold {
                let mut samples = Vec::with_capacity(self.cfg.a);
                for _ in 0..self.cfg.a {
                    let (_, s) = self.window.pop_front().expect("window length checked");
                    samples.push(s);
                }
                self.open = Some(OpenSegment { angles, samples, est, pending: Vec::new() });
                // Anything still buffered behind the window goes through the
                // gate; the seeded tail is shorter than the outlier budget, so
                // it cannot close the segment it just opened.
                let rest: Vec<(f64, ControlSample)> = self.window.drain(..).collect();
                for (a, s) in rest {
                    let closed = self.gate(a, s);
                    debug_assert!(closed.is_none());
                }
            } else {
                self.window.pop_front();
            }
        }
    }

    fn emit(&mut self, open: OpenSegment) -> Segment {
        let i_start = open.samples.iter().map(|s| s.k).min().expect("segment non-empty");
        let i_end = open.samples.iter().map(|s| s.k).max().expect("segment non-empty");
        let seg = Segment {
            s: self.next_id,
            i_start,
            i_end,
            samples: open.samples,
            direction: open.est,
        };
        self.next_id += 1;
        seg
    }
}

/// Convenience wrapper: runs the state machine over a finite stream.
pub fn segment_stream<I>(samples: I, cfg: &SegmenterConfig) -> Vec<Segment>
where
    I: IntoIterator<Item = ControlSample>,
{
    let mut machine = Segmenter::new(cfg.clone());
    let mut out = Vec::new();
    for s in samples {
        if let Some(seg) = machine.push(s) {
            out.push(seg);
        }
    }
    if let Some(seg) = machine.finish() {
        out.push(seg);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traj::Point;

    fn sample(k: u64, u: [f64; 2]) -> ControlSample {
        ControlSample { z: Point::from(&[k as f64, 0.0][..]), u: u.to_vec(), k }
    }

    fn cfg() -> SegmenterConfig {
        SegmenterConfig { a: 5, theta_dev: 0.26, d_theta: 3.0, n_theta: 4, cdf_threshold: 0.9 }
    }

    #[test]
    fn aligned_stream_gives_one_segment() {
        let samples: Vec<_> = (0..20).map(|k| sample(k, [1.0, 0.0])).collect();
        let segs = segment_stream(samples, &cfg());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].i_start, 0);
        assert_eq!(segs[0].i_end, 19);
        assert_eq!(segs[0].samples.len(), 20);
    }

    #[test]
    fn right_angle_turn_gives_two_segments() {
        let mut samples: Vec<_> = (0..20).map(|k| sample(k, [1.0, 0.0])).collect();
        samples.extend((20..40).map(|k| sample(k, [0.0, 1.0])));
        let segs = segment_stream(samples, &cfg());
        assert_eq!(segs.len(), 2);
        // Boundary within n_theta samples of the true turn at index 20.
        assert!(segs[0].i_end < 20);
        assert!(segs[1].i_start >= 20 && segs[1].i_start < 20 + 4);
        assert_eq!(segs[1].i_end, 39);
    }

    #[test]
    fn uniform_directions_give_no_segment() {
        // Pseudo-random angles spread over the circle; windows never reach
        // the 0.9 mass bound over +-0.26 rad.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut angles = Vec::new();
        for _ in 0..20 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (state >> 11) as f64 / (1u64 << 53) as f64;
            angles.push(a * core::f64::consts::TAU - core::f64::consts::PI);
        }
        let samples: Vec<_> = angles
            .iter()
            .enumerate()
            .map(|(k, &a)| sample(k as u64, [a.cos(), a.sin()]))
            .collect();
        let segs = segment_stream(samples, &cfg());
        assert!(segs.is_empty(), "got {} segments", segs.len());
    }

    #[test]
    fn segments_are_ordered_and_disjoint() {
        let mut samples = Vec::new();
        let mut k = 0;
        for dir in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]] {
            for _ in 0..15 {
                samples.push(sample(k, dir));
                k += 1;
            }
        }
        let segs = segment_stream(samples, &cfg());
        assert_eq!(segs.len(), 3);
        for pair in segs.windows(2) {
            assert!(pair[0].i_end < pair[1].i_start);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let phi = 0.7f64;
        let base: Vec<[f64; 2]> = (0..30)
            .map(|k| if k < 15 { [1.0, 0.2] } else { [-0.3, 1.0] })
            .collect();
        let plain: Vec<_> = base
            .iter()
            .enumerate()
            .map(|(k, u)| sample(k as u64, *u))
            .collect();
        let rotated: Vec<_> = base
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let (c, s) = (phi.cos(), phi.sin());
                sample(k as u64, [c * u[0] - s * u[1], s * u[0] + c * u[1]])
            })
            .collect();
        let a = segment_stream(plain, &cfg());
        let b = segment_stream(rotated, &cfg());
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.i_start, sb.i_start);
            assert_eq!(sa.i_end, sb.i_end);
            let dmu = crate::vonmises::wrap_angle(sb.direction.mu - sa.direction.mu - phi);
            assert!(dmu.abs() < 1e-9, "mu shift {dmu}");
        }
    }

    #[test]
    fn stream_end_closes_open_segment() {
        let samples: Vec<_> = (0..7).map(|k| sample(k, [1.0, 0.0])).collect();
        let segs = segment_stream(samples, &cfg());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].samples.len(), 7);
    }

    #[test]
    fn accepted_samples_pass_gate_against_final_estimate() {
        let mut samples: Vec<_> = (0..25).map(|k| sample(k, [1.0, 0.02 * (k as f64 % 3.0)])).collect();
        samples.extend((25..40).map(|k| sample(k, [0.0, -1.0])));
        let segs = segment_stream(samples, &cfg());
        for seg in &segs {
            for s in &seg.samples {
                assert!(mahalanobis_angle(s.angle(), &seg.direction) < cfg().d_theta);
            }
        }
    }
}
