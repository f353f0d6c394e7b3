//! Axis-aligned box algebra shared by occlusion reasoning and association.
//!
//! Coordinates are continuous pixels with the origin at the top-left corner
//! and `y` growing downward. When a box is rasterized, pixel `(x, y)` belongs
//! to it iff `left <= x < right` and `top <= y < bottom`, so the analytic
//! area of an integer-aligned box equals its pixel count.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid box [{left}, {top}, {right}, {bottom}]: edges must be finite with left < right and top < bottom")]
    InvalidBox {
        left: f64,
        top: f64,
        right: f64,
        bottom: f64,
    },
}

/// A rectangle with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    left: f64,
    top: f64,
    right: f64,
    bottom: f64,
}

impl BBox {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Result<Self, GeometryError> {
        let finite = left.is_finite() && top.is_finite() && right.is_finite() && bottom.is_finite();
        if !finite || left >= right || top >= bottom {
            return Err(GeometryError::InvalidBox {
                left,
                top,
                right,
                bottom,
            });
        }
        Ok(Self {
            left,
            top,
            right,
            bottom,
        })
    }

    /// Builds a box from the `left, top, width, height` layout used on disk.
    pub fn from_ltwh(left: f64, top: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(left, top, left + width, top + height)
    }

    /// Builds a box from a center and an extent, widening the extent to at
    /// least one pixel on each axis. Used for filter estimates whose scale may
    /// have drifted to zero or below.
    pub fn from_center_clamped(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        let width = if width >= 1.0 { width } else { 1.0 };
        let height = if height >= 1.0 { height } else { 1.0 };
        Self {
            left: cx - width / 2.0,
            top: cy - height / 2.0,
            right: cx + width / 2.0,
            bottom: cy + height / 2.0,
        }
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// Bottom edge; also the depth proxy (a larger bottom is nearer the camera).
    pub fn bottom(&self) -> f64 {
        self.bottom
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.left + self.right) / 2.0,
            (self.top + self.bottom) / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.left, self.top, self.right, self.bottom]
    }

    /// Overlap rectangle, or `None` when the boxes share no positive area.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let left = self.left.max(other.left);
        let top = self.top.max(other.top);
        let right = self.right.min(other.right);
        let bottom = self.bottom.min(other.bottom);
        (left < right && top < bottom).then_some(BBox {
            left,
            top,
            right,
            bottom,
        })
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        match self.intersect(other) {
            Some(overlap) => {
                let inter = overlap.area();
                let union = self.area() + other.area() - inter;
                (inter / union).clamp(0.0, 1.0)
            }
            None => 0.0,
        }
    }

    /// Restricts the box to `[0, width) x [0, height)`. Returns `None` when
    /// nothing of the box remains inside the image.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        let left = self.left.max(0.0);
        let top = self.top.max(0.0);
        let right = self.right.min(width);
        let bottom = self.bottom.min(height);
        (left < right && top < bottom).then_some(BBox {
            left,
            top,
            right,
            bottom,
        })
    }

    /// Integer pixel rectangle `[x0, x1) x [y0, y1)` enclosing the box, with
    /// sub-pixel edges rounded outward.
    pub fn pixel_rect(&self) -> PixelRect {
        PixelRect {
            x0: self.left.floor() as i64,
            y0: self.top.floor() as i64,
            x1: self.right.ceil() as i64,
            y1: self.bottom.ceil() as i64,
        }
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Half-open integer pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        (self.x1 - self.x0).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0).max(0) as usize
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.x0 <= x && x < self.x1 && self.y0 <= y && y < self.y1
    }

    pub fn intersect(&self, other: &PixelRect) -> PixelRect {
        PixelRect {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        }
    }
}

pub fn area(b: &BBox) -> f64 {
    b.area()
}

pub fn intersect(a: &BBox, b: &BBox) -> Option<BBox> {
    a.intersect(b)
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

/// Pairwise IoU, rows indexed by `a` and columns by `b`.
pub fn iou_matrix(a: &[BBox], b: &[BBox]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i].iou(&b[j]))
}
