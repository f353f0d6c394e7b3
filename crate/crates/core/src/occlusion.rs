//! Occlusion estimation from box overlaps.
//!
//! Boxes are depth-ordered by their bottom edges: when two boxes overlap and
//! one bottom lies at least `thre_occ` pixels lower in the image, that box is
//! nearer the camera and occludes the other. An object's raw coefficient is
//! the fraction of its pixels covered by the union of its occluders. The
//! refined coefficient weights each covered pixel by a Gaussian map centred on
//! the boxes, so pixels near object centres count more than background near
//! box borders.
//!
//! All rasterization happens on the integer pixel grid. A box covers the
//! pixels of its outward-rounded [`PixelRect`](crate::geometry::PixelRect);
//! Gaussian kernels are evaluated at pixel centres. The coefficient divisor is
//! the continuous area of the box after clipping to the image.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, PixelRect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcclusionParamsError {
    #[error("occlusion threshold must be non-negative, got {0}")]
    Threshold(f64),
    #[error("gaussian divisors must be positive, got k_x={0}, k_y={1}")]
    GaussianScale(f64, f64),
    #[error("image dimensions must be positive, got {0}x{1}")]
    Image(u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionParams {
    /// Minimum bottom-edge gap (px) before one box is considered in front.
    pub thre_occ: f64,
    /// Horizontal Gaussian divisor: `sigma_x = width / k_x`.
    pub k_x: f64,
    /// Vertical Gaussian divisor: `sigma_y = height / k_y`.
    pub k_y: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Report Gaussian-refined coefficients instead of raw ones.
    pub use_gm: bool,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self {
            thre_occ: 5.0,
            k_x: 3.0 * std::f64::consts::SQRT_2,
            k_y: 3.0,
            image_width: 1920,
            image_height: 1080,
            use_gm: true,
        }
    }
}

impl OcclusionParams {
    /// `(k_x, k_y) = (5, 3)`, the best-scoring divisors on the validation grid.
    pub fn validation_optimum() -> Self {
        Self {
            k_x: 5.0,
            k_y: 3.0,
            ..Self::default()
        }
    }

    pub fn with_image(mut self, width: u32, height: u32) -> Self {
        self.image_width = width;
        self.image_height = height;
        self
    }

    pub fn validate(&self) -> Result<(), OcclusionParamsError> {
        if self.thre_occ.is_nan() || self.thre_occ < 0.0 {
            return Err(OcclusionParamsError::Threshold(self.thre_occ));
        }
        if !(self.k_x > 0.0 && self.k_y > 0.0) || !self.k_x.is_finite() || !self.k_y.is_finite() {
            return Err(OcclusionParamsError::GaussianScale(self.k_x, self.k_y));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(OcclusionParamsError::Image(
                self.image_width,
                self.image_height,
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionReport {
    /// One coefficient per input box, refined when `use_gm` is set.
    pub coefficients: Vec<f64>,
    /// `relation[(i, j)]` is true when box `j` occludes box `i`.
    pub relation: DMatrix<bool>,
    /// Indices of boxes lying entirely outside the image.
    pub outside: Vec<usize>,
}

/// A box prepared for rasterization: clipped geometry plus the original
/// bottom edge, which stays the depth proxy even when it leaves the image.
#[derive(Debug, Clone, Copy)]
struct Prepared {
    clipped: Option<BBox>,
    bottom: f64,
}

impl Prepared {
    fn rect(&self) -> Option<PixelRect> {
        self.clipped.as_ref().map(BBox::pixel_rect)
    }
}

fn prepare(boxes: &[BBox], params: &OcclusionParams) -> Vec<Prepared> {
    let (w, h) = (params.image_width as f64, params.image_height as f64);
    boxes
        .iter()
        .map(|b| Prepared {
            clipped: b.clip(w, h),
            bottom: b.bottom(),
        })
        .collect()
}

/// Overlap graph on the clipped boxes, ignoring self-pairs.
fn overlaps(prepared: &[Prepared]) -> DMatrix<bool> {
    let n = prepared.len();
    DMatrix::from_fn(n, n, |i, j| {
        i != j
            && match (&prepared[i].clipped, &prepared[j].clipped) {
                (Some(a), Some(b)) => a.iou(b) > 0.0,
                _ => false,
            }
    })
}

fn relation_from(prepared: &[Prepared], overlap: &DMatrix<bool>, thre_occ: f64) -> DMatrix<bool> {
    let n = prepared.len();
    DMatrix::from_fn(n, n, |i, j| {
        overlap[(i, j)] && prepared[j].bottom - prepared[i].bottom >= thre_occ
    })
}

/// Occlusion relation: entry `(i, j)` holds when the boxes overlap and
/// `bottom_j - bottom_i >= thre_occ`.
pub fn depth_relation(boxes: &[BBox], params: &OcclusionParams) -> DMatrix<bool> {
    let prepared = prepare(boxes, params);
    relation_from(&prepared, &overlaps(&prepared), params.thre_occ)
}

/// Boxes whose kernels are drawn into the Gaussian map: those overlapping at
/// least one other box.
pub fn participants(boxes: &[BBox], params: &OcclusionParams) -> Vec<bool> {
    let prepared = prepare(boxes, params);
    let overlap = overlaps(&prepared);
    (0..boxes.len())
        .map(|i| overlap.row(i).iter().any(|&v| v))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Kernel {
    cx: f64,
    cy: f64,
    inv_two_var_x: f64,
    inv_two_var_y: f64,
}

impl Kernel {
    fn new(b: &BBox, params: &OcclusionParams) -> Self {
        let (cx, cy) = b.center();
        let sx = b.width() / params.k_x;
        let sy = b.height() / params.k_y;
        Self {
            cx,
            cy,
            inv_two_var_x: 1.0 / (2.0 * sx * sx),
            inv_two_var_y: 1.0 / (2.0 * sy * sy),
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        (-(dx * dx * self.inv_two_var_x + dy * dy * self.inv_two_var_y)).exp()
    }
}

/// Gaussian map value at image position `(x, y)`: the maximum kernel over the
/// given boxes whose pixel rectangle contains the pixel under `(x, y)`, or 0
/// when no box covers it. The caller chooses which boxes are drawn; the
/// coefficient computation draws only [`participants`].
pub fn gaussian_map_value(boxes: &[BBox], params: &OcclusionParams, x: f64, y: f64) -> f64 {
    let (px, py) = (x.floor() as i64, y.floor() as i64);
    prepare(boxes, params)
        .iter()
        .filter_map(|p| p.clipped)
        .filter(|b| b.pixel_rect().contains(px, py))
        .map(|b| Kernel::new(&b, params).eval(x, y))
        .fold(0.0, f64::max)
}

/// Full-image Gaussian map, row-major `height x width`, written only inside
/// the drawn boxes.
#[derive(Debug, Clone)]
pub struct GaussianMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GaussianMap {
    fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Draws the kernel of every box that overlaps another box.
    pub fn render(boxes: &[BBox], params: &OcclusionParams) -> Self {
        let prepared = prepare(boxes, params);
        Self::render_prepared(&prepared, &overlaps(&prepared), params)
    }

    fn render_prepared(
        prepared: &[Prepared],
        overlap: &DMatrix<bool>,
        params: &OcclusionParams,
    ) -> Self {
        let mut gm = Self::zeros(params.image_width as usize, params.image_height as usize);
        for (i, p) in prepared.iter().enumerate() {
            if overlap.row(i).iter().any(|&v| v) {
                gm.draw(
                    &p.clipped.expect("overlapping boxes lie in the image"),
                    params,
                );
            }
        }
        gm
    }

    fn draw(&mut self, b: &BBox, params: &OcclusionParams) {
        let kernel = Kernel::new(b, params);
        let r = b.pixel_rect();
        for y in r.y0..r.y1 {
            let row = y as usize * self.width;
            let fy = y as f64 + 0.5;
            for x in r.x0..r.x1 {
                let v = kernel.eval(x as f64 + 0.5, fy);
                let cell = &mut self.data[row + x as usize];
                if v > *cell {
                    *cell = v;
                }
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Unweighted coefficients: covered pixel count over box area.
pub fn raw_coefficients(boxes: &[BBox], params: &OcclusionParams) -> Vec<f64> {
    compute(
        boxes,
        &OcclusionParams {
            use_gm: false,
            ..*params
        },
    )
    .coefficients
}

/// Runs the full occlusion pass. With `use_gm` unset the coefficients are the
/// raw ones.
pub fn refined_coefficients(boxes: &[BBox], params: &OcclusionParams) -> OcclusionReport {
    compute(boxes, params)
}

fn compute(boxes: &[BBox], params: &OcclusionParams) -> OcclusionReport {
    let n = boxes.len();
    let prepared = prepare(boxes, params);
    let outside: Vec<usize> = prepared
        .iter()
        .enumerate()
        .filter(|(_, p)| p.clipped.is_none())
        .map(|(i, _)| i)
        .collect();
    for &i in &outside {
        warn!(
            "box {i} {:?} lies outside the image; its occlusion coefficient is 0",
            boxes[i]
        );
    }

    let overlap = overlaps(&prepared);
    let relation = relation_from(&prepared, &overlap, params.thre_occ);
    let mut coefficients = vec![0.0; n];

    if !overlap.iter().any(|&v| v) {
        return OcclusionReport {
            coefficients,
            relation,
            outside,
        };
    }

    let gm = params
        .use_gm
        .then(|| GaussianMap::render_prepared(&prepared, &overlap, params));

    for i in 0..n {
        let occluders: Vec<usize> = (0..n).filter(|&j| relation[(i, j)]).collect();
        if occluders.is_empty() {
            continue;
        }
        let own = prepared[i].clipped.expect("related boxes lie in the image");
        let local = own.pixel_rect();
        let (w, h) = (local.width(), local.height());

        let mut mask = vec![false; w * h];
        for &j in &occluders {
            let other = prepared[j].rect().expect("related boxes lie in the image");
            let overlap = local.intersect(&other);
            // Offsets of the overlap inside the local crop.
            let t = (overlap.y0 - local.y0).max(0) as usize;
            let b = ((overlap.y1 - local.y0).max(0) as usize).min(h);
            let l = (overlap.x0 - local.x0).max(0) as usize;
            let r = ((overlap.x1 - local.x0).max(0) as usize).min(w);
            for row in t..b {
                mask[row * w + l..row * w + r].fill(true);
            }
        }

        let covered = match &gm {
            Some(gm) => {
                let mut sum = 0.0;
                for row in 0..h {
                    let y = local.y0 as usize + row;
                    let base = y * gm.width + local.x0 as usize;
                    let weights = &gm.data[base..base + w];
                    let flags = &mask[row * w..(row + 1) * w];
                    sum += weights
                        .iter()
                        .zip(flags)
                        .filter(|(_, &m)| m)
                        .map(|(v, _)| *v)
                        .sum::<f64>();
                }
                sum
            }
            None => mask.iter().filter(|&&m| m).count() as f64,
        };
        coefficients[i] = (covered / own.area()).clamp(0.0, 1.0);
    }

    OcclusionReport {
        coefficients,
        relation,
        outside,
    }
}
