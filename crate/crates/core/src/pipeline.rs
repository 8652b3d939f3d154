//! End-to-end learning pass: filter, segment, classify, fit, fuse, cluster.

use alloc::vec::Vec;

use crate::atlas::{cluster_attractors, Atlas, FieldEstimate};
use crate::error::Result;
use crate::field::{classify_phase, fit_far_lognormal, FarFieldParams};
use crate::filter::{run_rw_pass, FilterConfig};
use crate::fitter::{estimate_beta_alpha, fit_segment, fuse_estimates, FitterConfig};
use crate::fmath;
use crate::segment::{segment_stream, Segment, SegmenterConfig};
use crate::traj::{ControlSample, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub segmenter: SegmenterConfig,
    pub fitter: FitterConfig,
    /// Upper bound of the cluster-count sweep.
    pub k_max: usize,
    /// Seed for the k-means restarts.
    pub cluster_seed: u64,
}

impl PipelineConfig {
    pub fn new(n: usize) -> Self {
        PipelineConfig {
            filter: FilterConfig::new(n),
            segmenter: SegmenterConfig::default(),
            fitter: FitterConfig::default(),
            k_max: 8,
            cluster_seed: 0,
        }
    }
}

/// Turns one segment into a full switching-field estimate, or `None` when
/// the segment never enters a near range of interaction (no sustained
/// deceleration) or is too short to fit.
pub fn estimate_segment(seg: &Segment, cfg: &FitterConfig) -> Option<FieldEstimate> {
    let speeds: Vec<f64> = seg.samples.iter().map(|s| s.speed()).collect();
    let switch = classify_phase(&speeds, cfg.dk_switch)?;
    // The control u_k covers the step that *ends* at z_k, so the speed law
    // is evaluated where the step began. Rewind each sample by its own
    // control before fitting; otherwise the field looks one step tighter
    // than it is.
    let near: Vec<ControlSample> = seg.samples[switch..]
        .iter()
        .map(|s| ControlSample {
            z: crate::traj::Point::new(
                s.z.coords.iter().zip(&s.u).map(|(z, u)| z - u).collect(),
            ),
            u: s.u.clone(),
            k: s.k,
        })
        .collect();
    if near.len() < 3 {
        return None;
    }
    let (beta, alpha) = estimate_beta_alpha(&speeds, switch);
    if beta <= 0.0 {
        return None;
    }
    let far = if switch >= 2 {
        fit_far_lognormal(&speeds[..switch]).ok()?
    } else {
        // No usable far-range leg: fall back on the cruise speed itself.
        FarFieldParams { mu_log: fmath::ln(beta), sigma_far: 0.0 }
    };

    let iters = fit_segment(&near, beta, alpha, cfg).ok()?;
    let (x0, sigma) = fuse_estimates(&iters).ok()?;
    if !x0.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
        return None;
    }
    let r_switch = near[0].z.distance(&x0);
    Some(FieldEstimate {
        near: crate::field::NearFieldParams { beta, alpha, x0, sigma },
        far,
        r_switch,
    })
}

/// Per-trajectory half of the pipeline: control extraction plus
/// segmentation. Exposed separately so callers can parallelize across
/// trajectories and for debug dumps.
pub fn segments_of(t: &Trajectory, cfg: &PipelineConfig) -> Result<Vec<Segment>> {
    let controls = run_rw_pass(t, &cfg.filter)?;
    Ok(segment_stream(controls, &cfg.segmenter))
}

/// Full learning pass over a dataset. Returns the merged atlas together
/// with the raw per-segment estimates that fed the clustering (useful for
/// traces and evaluation). An empty dataset or a dataset with no stable
/// segments yields an empty atlas.
pub fn learn_atlas(
    trajectories: &[Trajectory],
    cfg: &PipelineConfig,
) -> Result<(Atlas, Vec<FieldEstimate>)> {
    let mut estimates = Vec::new();
    for t in trajectories {
        for seg in segments_of(t, cfg)? {
            if let Some(e) = estimate_segment(&seg, &cfg.fitter) {
                estimates.push(e);
            }
        }
    }
    if estimates.is_empty() {
        return Ok((Atlas { letters: Vec::new(), dim: cfg.filter.n }, estimates));
    }
    let atlas = cluster_attractors(&estimates, cfg.k_max, cfg.cluster_seed)?;
    Ok((atlas, estimates))
}
