//! Synthetic scenarios: ground truth from piecewise-linear paths plus
//! detections degraded the way real detectors degrade under occlusion.
//!
//! Detections start as the ground-truth boxes. When an object's raw occlusion
//! coefficient exceeds the corruption trigger, its detection is narrowed
//! toward the side that stays visible, pushed further in that direction, and
//! given a low confidence. Optional Gaussian jitter is then added to each
//! edge.
//!
//! Randomness comes from a single SplitMix64 stream seeded with
//! [`ScenarioSpec::seed`]. Normals use Box–Muller on two consecutive draws
//! (`u = (next >> 11) · 2⁻⁵³`, first draw mapped to `1 - u`), keeping only the
//! cosine branch; per frame, objects are visited in path order and draw
//! left, top, right, bottom jitter in that order. Draws happen only when the
//! noise is positive.

use std::collections::BTreeMap;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::Detection;
use crate::geometry::BBox;
use crate::mot::{format_rows, write_text, Annotations, MotError};
use crate::occlusion::{raw_coefficients, OcclusionParams};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("object {id} at frame {frame} leaves the {width}x{height} image: {bbox:?}")]
    OutsideImage {
        id: u64,
        frame: u32,
        width: u32,
        height: u32,
        bbox: [f64; 4],
    },
    #[error("object {id}: {message}")]
    Path { id: u64, message: String },
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error("unknown preset {0:?}; expected crossing, shadowing or triple-pileup")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] MotError),
    #[error("cannot serialize scenario: {0}")]
    Json(#[from] serde_json::Error),
}

/// Object state at a key frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Waypoint {
    pub fn new(frame: u32, cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            frame,
            cx,
            cy,
            w,
            h,
        }
    }
}

/// An object present from its first to its last waypoint frame, moving
/// linearly between waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPath {
    pub id: u64,
    pub waypoints: Vec<Waypoint>,
}

impl ObjectPath {
    fn validate(&self) -> Result<(), SynthError> {
        let fail = |message: &str| SynthError::Path {
            id: self.id,
            message: message.to_string(),
        };
        if self.waypoints.is_empty() {
            return Err(fail("no waypoints"));
        }
        if self.waypoints.windows(2).any(|w| w[1].frame <= w[0].frame) {
            return Err(fail("waypoint frames must increase"));
        }
        if self.waypoints.iter().any(|w| !(w.w > 0.0 && w.h > 0.0)) {
            return Err(fail("waypoint extents must be positive"));
        }
        Ok(())
    }

    /// Interpolated box at `frame`, or `None` outside the path's lifetime.
    pub fn box_at(&self, frame: u32) -> Option<BBox> {
        let first = self.waypoints.first()?;
        let last = self.waypoints.last()?;
        if frame < first.frame || frame > last.frame {
            return None;
        }
        let wp = match self.waypoints.windows(2).find(|w| frame <= w[1].frame) {
            None => *first,
            Some(seg) => {
                let (a, b) = (seg[0], seg[1]);
                let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
                let lerp = |x: f64, y: f64| x + (y - x) * t;
                Waypoint::new(
                    frame,
                    lerp(a.cx, b.cx),
                    lerp(a.cy, b.cy),
                    lerp(a.w, b.w),
                    lerp(a.h, b.h),
                )
            }
        };
        BBox::new(
            wp.cx - wp.w / 2.0,
            wp.cy - wp.h / 2.0,
            wp.cx + wp.w / 2.0,
            wp.cy + wp.h / 2.0,
        )
        .ok()
    }
}

/// Degradation applied to detections of heavily occluded objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    /// Raw occlusion coefficient above which the detection is degraded.
    pub trigger: f64,
    /// Fraction of the width removed on the occluded side.
    pub shrink_factor: f64,
    /// Extra displacement toward the visible side, as a fraction of the
    /// original width.
    pub shift: f64,
    /// Confidence assigned to degraded detections.
    pub score_drop: f64,
}

impl Default for Corruption {
    fn default() -> Self {
        Self {
            trigger: 0.5,
            shrink_factor: 0.5,
            shift: 0.25,
            score_drop: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n_frames: u32,
    pub image: (u32, u32),
    pub paths: Vec<ObjectPath>,
    /// Standard deviation (px) of per-edge detection jitter.
    pub noise: f64,
    pub occlusion_corruption: Option<Corruption>,
    /// Bottom-edge threshold used to decide which object is occluded.
    pub thre_occ: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn n_objects(&self) -> usize {
        self.paths.len()
    }

    pub fn occlusion_params(&self) -> OcclusionParams {
        OcclusionParams {
            thre_occ: self.thre_occ,
            use_gm: false,
            ..OcclusionParams::default().with_image(self.image.0, self.image.1)
        }
    }

    /// The same scenario with clean detections.
    pub fn without_degradation(&self) -> Self {
        Self {
            noise: 0.0,
            occlusion_corruption: None,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_frames == 0 {
            return Err(SynthError::Spec("n_frames must be positive".into()));
        }
        if self.image.0 == 0 || self.image.1 == 0 {
            return Err(SynthError::Spec("image dimensions must be positive".into()));
        }
        if !(0.0..).contains(&self.noise) {
            return Err(SynthError::Spec(format!(
                "noise {} must be non-negative",
                self.noise
            )));
        }
        if let Some(c) = &self.occlusion_corruption {
            let unit = |v: f64| (0.0..=1.0).contains(&v);
            if !unit(c.trigger)
                || !(0.0..1.0).contains(&c.shrink_factor)
                || !unit(c.score_drop)
                || !(0.0..).contains(&c.shift)
            {
                return Err(SynthError::Spec(format!("invalid corruption {c:?}")));
            }
        }
        let mut ids: Vec<u64> = self.paths.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.paths.len() {
            return Err(SynthError::Spec("object ids must be unique".into()));
        }
        for p in &self.paths {
            p.validate()?;
        }
        Ok(())
    }
}

/// Generated ground truth and detections.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gt: Annotations,
    pub dets: BTreeMap<u32, Vec<Detection>>,
    /// Raw occlusion coefficient of every ground-truth box, keyed like `gt`.
    pub gt_occlusion: BTreeMap<u32, Vec<f64>>,
}

struct Normals(SplitMix64);

impl Normals {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn sample(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Narrows `b` toward its visible side and shifts it further that way.
fn degrade(b: &BBox, occluded_right: bool, c: &Corruption) -> BBox {
    let keep = b.width() * (1.0 - c.shrink_factor);
    let shift = b.width() * c.shift;
    let (l, r) = if occluded_right {
        (b.left() - shift, b.left() + keep - shift)
    } else {
        (b.right() - keep + shift, b.right() + shift)
    };
    BBox::new(l, b.top(), r, b.bottom()).unwrap_or(*b)
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, SynthError> {
    spec.validate()?;
    let params = spec.occlusion_params();
    let (w, h) = (spec.image.0 as f64, spec.image.1 as f64);
    let mut rng = Normals(SplitMix64::seed_from_u64(spec.seed));

    let mut gt = Annotations::new();
    let mut dets = BTreeMap::new();
    let mut gt_occlusion = BTreeMap::new();

    for frame in 1..=spec.n_frames {
        let mut present = Vec::new();
        for path in &spec.paths {
            if let Some(b) = path.box_at(frame) {
                if b.left() < 0.0 || b.top() < 0.0 || b.right() > w || b.bottom() > h {
                    return Err(SynthError::OutsideImage {
                        id: path.id,
                        frame,
                        width: spec.image.0,
                        height: spec.image.1,
                        bbox: b.to_array(),
                    });
                }
                present.push((path.id, b));
            }
        }
        if present.is_empty() {
            continue;
        }
        let boxes: Vec<BBox> = present.iter().map(|(_, b)| *b).collect();
        let oc = raw_coefficients(&boxes, &params);

        let mut frame_dets = Vec::with_capacity(boxes.len());
        for (i, b) in boxes.iter().enumerate() {
            let mut out = *b;
            let mut score = 1.0;
            if let Some(c) = &spec.occlusion_corruption {
                if oc[i] > c.trigger {
                    out = degrade(b, occluded_right(i, &boxes, &params), c);
                    score = c.score_drop;
                }
            }
            if spec.noise > 0.0 {
                let jitter: [f64; 4] = std::array::from_fn(|_| rng.sample() * spec.noise);
                let [l, t, r, btm] = out.to_array();
                let (l, t) = (l + jitter[0], t + jitter[1]);
                let r = (r + jitter[2]).max(l + 1.0);
                let btm = (btm + jitter[3]).max(t + 1.0);
                out = BBox::new(l, t, r, btm).unwrap_or(out);
            }
            frame_dets.push(Detection::new(out, score));
        }
        gt.insert(frame, present);
        dets.insert(frame, frame_dets);
        gt_occlusion.insert(frame, oc);
    }
    Ok(Scenario {
        gt,
        dets,
        gt_occlusion,
    })
}

/// Whether the occluders of box `i` cover mostly its right half.
fn occluded_right(i: usize, boxes: &[BBox], params: &OcclusionParams) -> bool {
    let relation = crate::occlusion::depth_relation(boxes, params);
    let (cx, _) = boxes[i].center();
    let mut moment = 0.0;
    for (j, other) in boxes.iter().enumerate() {
        if relation[(i, j)] {
            if let Some(o) = boxes[i].intersect(other) {
                moment += o.area() * (o.center().0 - cx);
            }
        }
    }
    moment > 0.0
}

fn path(id: u64, waypoints: &[(u32, f64, f64)], w: f64, h: f64) -> ObjectPath {
    ObjectPath {
        id,
        waypoints: waypoints
            .iter()
            .map(|&(f, cx, cy)| Waypoint::new(f, cx, cy, w, h))
            .collect(),
    }
}

pub const PRESET_NAMES: [&str; 3] = ["crossing", "shadowing", "triple-pileup"];

/// The fixed scenarios used by the regression and acceptance suites.
pub fn canonical_specs() -> Vec<ScenarioSpec> {
    vec![crossing(), shadowing(), triple_pileup()]
}

pub fn preset(name: &str) -> Result<ScenarioSpec, SynthError> {
    canonical_specs()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| SynthError::UnknownPreset(name.to_string()))
}

/// Two people of equal size walk toward each other and slow down as they
/// meet. The nearer one almost stops while the further one passes behind it
/// and walks on, staying more than three quarters hidden for a dozen frames.
fn crossing() -> ScenarioSpec {
    ScenarioSpec {
        name: "crossing".into(),
        n_frames: 120,
        image: (640, 360),
        paths: vec![
            path(
                1,
                &[(1, 160.0, 186.0), (60, 305.0, 186.0), (120, 310.0, 186.0)],
                80.0,
                190.0,
            ),
            path(
                2,
                &[(1, 530.0, 174.0), (60, 310.0, 174.0), (120, 190.0, 174.0)],
                80.0,
                190.0,
            ),
        ],
        noise: 0.0,
        occlusion_corruption: Some(Corruption {
            trigger: 0.6,
            shrink_factor: 0.2,
            shift: 0.15,
            score_drop: 0.3,
        }),
        thre_occ: 5.0,
        seed: 7,
    }
}

/// One person walks directly behind another at the same pace.
fn shadowing() -> ScenarioSpec {
    ScenarioSpec {
        name: "shadowing".into(),
        n_frames: 100,
        image: (640, 360),
        paths: vec![
            path(1, &[(1, 100.0, 160.0), (100, 500.0, 160.0)], 70.0, 150.0),
            path(2, &[(1, 130.0, 180.0), (100, 530.0, 180.0)], 70.0, 150.0),
        ],
        noise: 0.5,
        occlusion_corruption: Some(Corruption::default()),
        thre_occ: 5.0,
        seed: 11,
    }
}

/// Three people converge on one spot and disperse again.
fn triple_pileup() -> ScenarioSpec {
    ScenarioSpec {
        name: "triple-pileup".into(),
        n_frames: 120,
        image: (640, 360),
        paths: vec![
            path(
                1,
                &[(1, 120.0, 160.0), (60, 300.0, 165.0), (120, 480.0, 170.0)],
                70.0,
                150.0,
            ),
            path(
                2,
                &[(1, 520.0, 175.0), (60, 330.0, 178.0), (120, 140.0, 181.0)],
                70.0,
                150.0,
            ),
            path(
                3,
                &[(1, 320.0, 90.0), (60, 320.0, 192.0), (120, 320.0, 260.0)],
                70.0,
                150.0,
            ),
        ],
        noise: 0.5,
        occlusion_corruption: Some(Corruption::default()),
        thre_occ: 5.0,
        seed: 23,
    }
}

/// Writes `gt.txt`, `det.txt` and `scenario.json` into `dir`.
pub fn write_scenario(
    spec: &ScenarioSpec,
    scenario: &Scenario,
    dir: &Path,
) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir).map_err(|source| MotError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let gt = format_rows(
        scenario
            .gt
            .iter()
            .flat_map(|(&f, v)| v.iter().map(move |(id, b)| (f, *id as i64, b, 1.0))),
    );
    // Detections carry no identity on disk; the stable sort keeps their
    // generation order within a frame.
    let det = format_rows(
        scenario
            .dets
            .iter()
            .flat_map(|(&f, v)| v.iter().map(move |d| (f, -1, &d.bbox, d.score))),
    );
    write_text(dir.join("gt.txt"), &gt)?;
    write_text(dir.join("det.txt"), &det)?;
    write_text(
        dir.join("scenario.json"),
        &(serde_json::to_string_pretty(spec)? + "\n"),
    )?;
    Ok(())
}
