//! Optional JSON run configuration shared by all commands.
//!
//! Every section and every field is optional; absent values fall back to
//! the library defaults, so `{}` is a valid config.

use std::path::Path;

use anyhow::Context;
use fieldatlas_core::filter::FilterConfig;
use fieldatlas_core::fitter::FitterConfig;
use fieldatlas_core::pipeline::PipelineConfig;
use fieldatlas_core::segment::SegmenterConfig;
use fieldatlas_core::sim::SimConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub segmenter: SegmenterSection,
    #[serde(default)]
    pub fitter: FitterSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub cluster: ClusterSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub q_pos: Option<f64>,
    pub q_vel: Option<f64>,
    pub r_meas: Option<f64>,
    pub p0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmenterSection {
    pub a: Option<usize>,
    pub theta_dev: Option<f64>,
    pub d_theta: Option<f64>,
    pub n_theta: Option<usize>,
    pub cdf_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitterSection {
    pub learning_rate_x0: Option<f64>,
    pub learning_rate_sigma: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub dk_switch: Option<usize>,
    pub sigma_init: Option<f64>,
    pub r0_init: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub snr: Option<f64>,
    pub n_trajectories: Option<usize>,
    pub max_steps: Option<usize>,
    pub arrival_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub k_max: Option<usize>,
}

fn apply<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn filter_config(&self, n: usize) -> FilterConfig {
        let mut c = FilterConfig::new(n);
        apply(&mut c.q_pos, self.filter.q_pos);
        apply(&mut c.q_vel, self.filter.q_vel);
        apply(&mut c.r_meas, self.filter.r_meas);
        apply(&mut c.p0, self.filter.p0);
        c
    }

    pub fn segmenter_config(&self) -> SegmenterConfig {
        let mut c = SegmenterConfig::default();
        apply(&mut c.a, self.segmenter.a);
        apply(&mut c.theta_dev, self.segmenter.theta_dev);
        apply(&mut c.d_theta, self.segmenter.d_theta);
        apply(&mut c.n_theta, self.segmenter.n_theta);
        apply(&mut c.cdf_threshold, self.segmenter.cdf_threshold);
        c
    }

    pub fn fitter_config(&self) -> FitterConfig {
        let mut c = FitterConfig::default();
        apply(&mut c.learning_rate_x0, self.fitter.learning_rate_x0);
        apply(&mut c.learning_rate_sigma, self.fitter.learning_rate_sigma);
        apply(&mut c.max_iters, self.fitter.max_iters);
        apply(&mut c.grad_tol, self.fitter.grad_tol);
        apply(&mut c.dk_switch, self.fitter.dk_switch);
        if self.fitter.sigma_init.is_some() {
            c.sigma_init = self.fitter.sigma_init;
        }
        if self.fitter.r0_init.is_some() {
            c.r0_init = self.fitter.r0_init;
        }
        c
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::default();
        apply(&mut c.snr, self.sim.snr);
        apply(&mut c.n_trajectories, self.sim.n_trajectories);
        apply(&mut c.max_steps, self.sim.max_steps);
        apply(&mut c.arrival_radius, self.sim.arrival_radius);
        c
    }

    /// Assembles the full learning pipeline; `seed` feeds the clustering.
    pub fn pipeline_config(&self, n: usize, seed: u64) -> PipelineConfig {
        let mut p = PipelineConfig::new(n);
        p.filter = self.filter_config(n);
        p.segmenter = self.segmenter_config();
        p.fitter = self.fitter_config();
        apply(&mut p.k_max, self.cluster.k_max);
        p.cluster_seed = seed;
        p
    }
}
