use serde::{Deserialize, Serialize};

use crate::geometry::BBox;

/// A detector output: a box and its confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64) -> Self {
        Self { bbox, score }
    }
}
