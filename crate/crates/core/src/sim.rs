//! Ground-truth scenario generation with SNR-controlled noise.
//!
//! Every random draw flows from the scenario seed; trajectory `i` uses
//! the derived seed `seed + i`, so datasets are reproducible bit for bit
//! and trajectories may be generated in parallel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{eval_near_speed, SwitchingField};
use crate::fmath;
use crate::traj::{Observation, Point, Trajectory};

/// A synthetic environment: ground-truth attractors inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub attractors: Vec<SwitchingField>,
    /// Axis-aligned bounds: [[xmin, ymin], [xmax, ymax]].
    pub bounds: [[f64; 2]; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Signal-to-noise ratio: speed magnitude over the uniform-noise
    /// half-width.
    pub snr: f64,
    pub n_trajectories: usize,
    pub max_steps: usize,
    /// Goal arrival distance (stop condition).
    pub arrival_radius: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { snr: 10.0, n_trajectories: 150, max_steps: 1000, arrival_radius: 0.02 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr > 0.0) {
            return Err(Error::Contract("snr must be positive"));
        }
        if self.n_trajectories < 1 {
            return Err(Error::Contract("need at least one trajectory"));
        }
        Ok(())
    }
}

/// Cruise-to-deceleration switch radius used by the generator.
pub fn sim_switch_radius(sigma: f64) -> f64 {
    3.0 * sigma
}

/// Speed law driving the simulated agents: constant cruise at `beta`
/// outside three shape scales, the near-range deceleration law inside.
fn sim_speed(field: &SwitchingField, r: f64) -> f64 {
    if r > sim_switch_radius(field.near.sigma) {
        field.near.beta
    } else {
        eval_near_speed(&field.near, r)
    }
}

fn uniform_boundary_start(bounds: &[[f64; 2]; 2], rng: &mut ChaCha8Rng) -> Point {
    let [min, max] = bounds;
    let side = rng.gen_range(0..4u8);
    let (x, y) = match side {
        0 => (rng.gen_range(min[0]..max[0]), min[1]),
        1 => (rng.gen_range(min[0]..max[0]), max[1]),
        2 => (min[0], rng.gen_range(min[1]..max[1])),
        _ => (max[0], rng.gen_range(min[1]..max[1])),
    };
    Point::from(&[x, y][..])
}

/// Simulates a single agent visiting the given goal sequence. Returns the
/// trajectory and whether it was truncated at `max_steps` before reaching
/// the last goal.
pub fn simulate_agent(
    scenario: &Scenario,
    goals: &[usize],
    cfg: &SimConfig,
    rng_seed: u64,
) -> Result<(Trajectory, bool)> {
    cfg.validate()?;
    if goals.is_empty() {
        return Err(Error::Contract("goal list must be non-empty"));
    }
    if goals.iter().any(|&g| g >= scenario.attractors.len()) {
        return Err(Error::Contract("goal index out of range"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pos = uniform_boundary_start(&scenario.bounds, &mut rng);
    let mut obs = vec![Observation { k: 0, z: pos.clone() }];
    let mut goal_idx = 0;
    let mut truncated = true;

    for k in 1..=cfg.max_steps {
        let field = &scenario.attractors[goals[goal_idx]];
        let center = &field.near.x0;
        let r = pos.distance(center);
        let speed = sim_speed(field, r);
        let mut v: Vec<f64> = if r > 0.0 {
            pos.coords
                .iter()
                .zip(&center.coords)
                .map(|(p, c)| speed * (c - p) / r)
                .collect()
        } else {
            vec![0.0; pos.dim()]
        };
        let b = fmath::hypot_slice(&v) / cfg.snr;
        for vi in &mut v {
            *vi += rng.gen_range(-b..=b);
        }
        pos = Point::new(pos.coords.iter().zip(&v).map(|(p, vi)| p + vi).collect());
        obs.push(Observation { k: k as u64, z: pos.clone() });

        if pos.distance(center) <= cfg.arrival_radius {
            goal_idx += 1;
            if goal_idx == goals.len() {
                truncated = false;
                break;
            }
        }
    }

    let id = format!("agent-{rng_seed}");
    Ok((Trajectory::new(id, obs)?, truncated))
}

/// Draws a random goal sequence of length one to three, avoiding
/// immediate repeats so every leg covers distance.
fn draw_goals(n_attractors: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let len = rng.gen_range(1..=3usize);
    let mut goals = Vec::with_capacity(len);
    for _ in 0..len {
        let mut g = rng.gen_range(0..n_attractors);
        if let Some(&prev) = goals.last() {
            if n_attractors > 1 {
                while g == prev {
                    g = rng.gen_range(0..n_attractors);
                }
            }
        }
        goals.push(g);
    }
    goals
}

/// Generates the full dataset; deterministic for a fixed scenario seed.
pub fn generate_dataset(scenario: &Scenario, cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    if scenario.attractors.is_empty() {
        return Err(Error::Contract("scenario needs at least one attractor"));
    }
    let mut out = Vec::with_capacity(cfg.n_trajectories);
    for i in 0..cfg.n_trajectories {
        let seed = scenario.seed.wrapping_add(i as u64);
        let mut goal_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5_a5a5_dead_beef);
        let goals = draw_goals(scenario.attractors.len(), &mut goal_rng);
        let (mut t, _) = simulate_agent(scenario, &goals, cfg, seed)?;
        t.id = format!("agent-{i:04}");
        out.push(t);
    }
    Ok(out)
}

/// The three-attractor reference scenario used throughout evaluation:
/// centers (0, 0.75), (-0.6, 0.25), (0.55, -0.7) with intensities
/// 0.09 / 0.108 / 0.117 and shapes sigma^2 = 0.1 / 0.2 / 0.3.
pub fn reference_scenario(seed: u64) -> Scenario {
    let make = |x: f64, y: f64, beta: f64, sigma2: f64| {
        let sigma = fmath::sqrt(sigma2);
        SwitchingField {
            near: crate::field::NearFieldParams {
                beta,
                alpha: beta,
                x0: Point::from(&[x, y][..]),
                sigma,
            },
            far: crate::field::FarFieldParams { mu_log: fmath::ln(beta), sigma_far: 0.0 },
            r_switch: sim_switch_radius(sigma),
        }
    };
    Scenario {
        attractors: vec![
            make(0.0, 0.75, 0.09, 0.1),
            make(-0.6, 0.25, 0.108, 0.2),
            make(0.55, -0.7, 0.117, 0.3),
        ],
        bounds: [[-1.0, -1.0], [1.0, 1.0]],
        seed,
    }
}

/// Helper for tests and hashing: a cheap stable digest of a dataset.
pub fn dataset_digest(trajectories: &[Trajectory]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut mix = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x100000001b3);
    };
    for t in trajectories {
        for b in t.id.as_bytes() {
            mix(*b as u64);
        }
        for o in &t.observations {
            mix(o.k);
            for c in &o.z.coords {
                mix(c.to_bits());
            }
        }
    }
    h
}

#[allow(unused)]
fn _assert_send(s: Scenario) -> impl Send {
    s
}

#[allow(unused_imports)]
use alloc::string::ToString;
