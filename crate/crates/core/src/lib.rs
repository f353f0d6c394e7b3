//! Occlusion-aware tracking by detection.
//!
//! A SORT-family tracker whose association and filter updates account for
//! how much of each object is hidden behind others. Occlusion is estimated
//! from box overlaps ordered by bottom edge ([`occlusion`]); the estimate
//! offsets first-stage association scores and damps Kalman corrections from
//! low-confidence detections ([`tracker`]).

pub mod association;
pub mod detection;
pub mod geometry;
pub mod kalman;
pub mod metrics;
pub mod mot;
pub mod occlusion;
pub mod synth;
pub mod tracker;

pub use detection::Detection;
pub use geometry::BBox;
pub use tracker::{Tracker, TrackerConfig, TrackerError};
