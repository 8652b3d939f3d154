//! Incremental learning of static attractive areas from agent position streams.
//!
//! The crate turns raw trajectories into an *atlas* of attractive force
//! fields. The processing chain is:
//!
//! 1. [`filter`] — a random-walk Kalman filter whose innovations expose the
//!    environment-induced control velocity at every observation.
//! 2. [`segment`] — online partition of the control stream into quasilinear
//!    segments via windowed von Mises estimation and Mahalanobis gating.
//! 3. [`field`] / [`fitter`] — a switching near/far velocity-field model and
//!    the gradient-descent estimation of its parameters per segment.
//! 4. [`atlas`] — k-means merging of per-segment estimates into environment
//!    letters, the augmented filter bank, and field-intensity rasters.
//! 5. [`sim`] / [`metrics`] — a seeded ground-truth scenario generator and
//!    the normalized error metric used for evaluation.
//!
//! The crate is `no_std` compatible (with `alloc`); disable the default
//! `std` feature for embedded use. File formats and the command-line
//! pipeline live in the companion `fieldatlas` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod atlas;
pub mod error;
pub mod field;
pub mod filter;
pub mod fitter;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod segment;
pub mod sim;
pub mod traj;
pub mod vonmises;

mod fmath;

pub use error::{Error, Result};
pub use traj::{ControlSample, Observation, Point, Trajectory};
