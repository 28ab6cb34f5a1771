//! Trajectory evaluation for visual SLAM.
//!
//! The crate computes the standard accuracy metrics over a ground-truth and an
//! estimated pose sequence (absolute trajectory error after rigid alignment,
//! relative pose error in translation and rotation) and the cohort-level
//! robustness statistics used when a SLAM system is evaluated over many
//! sequences and many randomized runs: per-sequence medians, cumulative
//! distributions, failure-gap detection, trajectory attributes and rank
//! correlation between attributes and metrics.
//!
//! ```
//! use slameval::{geom3d::{Pose, Rotation, Trajectory}, trajio, metrics};
//! use nalgebra::Vector3;
//!
//! let poses = (0..10)
//!     .map(|i| Pose::new(Rotation::identity(), Vector3::new(0.1 * i as f64, 0.0, 0.0))
//!         .with_timestamp(i as f64 / 30.0))
//!     .collect();
//! let gt = Trajectory::new("gt", poses).unwrap();
//! let assoc = trajio::associate(&gt, &gt, trajio::DEFAULT_MAX_TIME_DIFF).unwrap();
//! let report = metrics::ate(&gt, &gt, &assoc).unwrap();
//! assert!(report.rmse < 1e-12);
//! ```

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod cohort;
mod error;
pub mod geom3d;
pub mod metrics;
pub mod numeric;
pub mod synth;
pub mod trajio;
pub mod trajstats;

pub use error::{Error, Result};
