//! Domain types for positions, trajectories and control samples.
//!
//! All types are plain immutable values; the sample interval is normalized
//! to one sample internally, so every rate in the crate is "per sample".

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

/// A position in n-dimensional space (environment length units).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let sq: f64 = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        fmath::sqrt(sq)
    }

    pub fn is_finite(&self) -> bool {
        !self.coords.is_empty() && self.coords.iter().all(|c| c.is_finite())
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Self {
        Point { coords: c.to_vec() }
    }
}

/// One measured position with its sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub k: u64,
    pub z: Point,
}

/// An ordered, uniformly sampled position stream of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub observations: Vec<Observation>,
}

impl Trajectory {
    /// Builds a trajectory, checking length, shared dimension and strictly
    /// increasing uniformly spaced sample indexes.
    pub fn new(id: String, observations: Vec<Observation>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: observations.len() });
        }
        let n = observations[0].z.dim();
        for obs in &observations {
            if obs.z.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: obs.z.dim() });
            }
            if !obs.z.is_finite() {
                return Err(Error::Contract("non-finite coordinate"));
            }
        }
        for pair in observations.windows(2) {
            if pair[1].k <= pair[0].k {
                return Err(Error::Contract("sample indexes must be strictly increasing"));
            }
            if pair[1].k - pair[0].k != 1 {
                return Err(Error::Contract("non-uniform sample spacing"));
            }
        }
        Ok(Trajectory { id, observations })
    }

    pub fn dim(&self) -> usize {
        self.observations[0].z.dim()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// A position paired with the innovation-derived control velocity valid
/// at that position.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    pub z: Point,
    /// Control velocity, length units per sample.
    pub u: Vec<f64>,
    pub k: u64,
}

impl ControlSample {
    pub fn speed(&self) -> f64 {
        fmath::hypot_slice(&self.u)
    }

    /// Orientation of the control vector on the first two axes.
    pub fn angle(&self) -> f64 {
        fmath::atan2(self.u[1], self.u[0])
    }
}

/// Discrete velocity at each sample: `v_k = (z_{k+1} - z_k) / dk` with the
/// internal `dk = 1`. Output length is `len - 1`.
pub fn finite_difference_velocity(t: &Trajectory) -> Vec<Vec<f64>> {
    t.observations
        .windows(2)
        .map(|pair| {
            pair[1]
                .z
                .coords
                .iter()
                .zip(&pair[0].z.coords)
                .map(|(b, a)| b - a)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn traj(points: &[&[f64]]) -> Trajectory {
        let obs = points
            .iter()
            .enumerate()
            .map(|(k, p)| Observation { k: k as u64, z: Point::from(*p) })
            .collect();
        Trajectory::new("t".to_string(), obs).unwrap()
    }

    #[test]
    fn constant_velocity() {
        let t = traj(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(finite_difference_velocity(&t), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn stationary_agent() {
        let t = traj(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(finite_difference_velocity(&t), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn hand_subtraction() {
        let t = traj(&[&[0.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        assert_eq!(finite_difference_velocity(&t), vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn short_trajectory_rejected() {
        let obs = vec![Observation { k: 0, z: Point::from(&[0.0, 0.0][..]) }];
        assert!(matches!(
            Trajectory::new("t".to_string(), obs),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn gap_in_sampling_rejected() {
        let obs = vec![
            Observation { k: 0, z: Point::from(&[0.0, 0.0][..]) },
            Observation { k: 2, z: Point::from(&[1.0, 0.0][..]) },
        ];
        assert!(Trajectory::new("t".to_string(), obs).is_err());
    }
}
