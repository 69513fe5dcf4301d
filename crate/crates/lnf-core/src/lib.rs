//! Local neighborhood features for point-cloud classification.
//!
//! The crate provides the full numerical pipeline: farthest point sampling,
//! ball / kNN neighborhood grouping, radius-normalized distance and
//! directional-vector features, a small set-abstraction classifier with
//! exact reverse-mode gradients, a training loop with top-k checkpoint
//! retention, and weight-averaged ("soup") inference.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `lnf` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cloud;
pub mod data;
pub mod error;
pub mod features;
pub mod neighborhood;
pub mod network;
pub mod rng;
pub mod training;

mod math;

pub use cloud::{centroid, normalize_unit_sphere, Point3, PointCloud};
pub use error::Error;
pub use rng::Rng;
