//! Helpers shared by the integration suites: seeded generators, naive oracles
//! and a reference SORT+Byte pipeline written directly against the filter and
//! solver primitives.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use oasort::association::hungarian::solve;
use oasort::geometry::iou_matrix;
use oasort::kalman::KalmanState;
use oasort::occlusion::OcclusionParams;
use oasort::synth::{ObjectPath, ScenarioSpec, Waypoint};
use oasort::tracker::{TrackOutput, TrackResults, TrackerConfig};
use oasort::{BBox, Detection};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

/// Random box that may poke out of a `size x size` image by up to 20 px.
pub fn random_box(rng: &mut Rng, size: f64) -> BBox {
    let w = rng.range(4.0, size * 0.4);
    let h = rng.range(4.0, size * 0.5);
    let l = rng.range(-20.0, size - w + 20.0);
    let t = rng.range(-20.0, size - h + 20.0);
    BBox::new(l, t, l + w, t + h).unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
}

/// Rewrites golden files instead of comparing against them.
pub fn blessing() -> bool {
    std::env::var_os("OASORT_BLESS").is_some()
}

// ---------------------------------------------------------------------------
// Occlusion oracle

struct Clipped {
    l: f64,
    t: f64,
    r: f64,
    b: f64,
    bottom: f64,
}

impl Clipped {
    fn pixels(&self) -> (i64, i64, i64, i64) {
        (
            self.l.floor() as i64,
            self.t.floor() as i64,
            self.r.ceil() as i64,
            self.b.ceil() as i64,
        )
    }

    fn holds(&self, x: i64, y: i64) -> bool {
        let (x0, y0, x1, y1) = self.pixels();
        x >= x0 && x < x1 && y >= y0 && y < y1
    }
}

fn clip_all(boxes: &[BBox], w: f64, h: f64) -> Vec<Option<Clipped>> {
    boxes
        .iter()
        .map(|b| {
            let c = Clipped {
                l: b.left().max(0.0),
                t: b.top().max(0.0),
                r: b.right().min(w),
                b: b.bottom().min(h),
                bottom: b.bottom(),
            };
            (c.l < c.r && c.t < c.b).then_some(c)
        })
        .collect()
}

fn overlap_area(a: &Clipped, b: &Clipped) -> f64 {
    let w = a.r.min(b.r) - a.l.max(b.l);
    let h = a.b.min(b.b) - a.t.max(b.t);
    if w > 0.0 && h > 0.0 {
        w * h
    } else {
        0.0
    }
}

/// Per-pixel evaluation over the whole image: the Gaussian map is the max of
/// every overlapping box's kernel at each pixel centre, and each box sums the
/// map over pixels covered by one of its occluders. Returns `(raw, refined)`.
pub fn naive_occlusion(boxes: &[BBox], params: &OcclusionParams) -> (Vec<f64>, Vec<f64>) {
    let (iw, ih) = (params.image_width as i64, params.image_height as i64);
    let clipped = clip_all(boxes, iw as f64, ih as f64);
    let n = boxes.len();
    let overlapping = |i: usize, j: usize| -> bool {
        match (&clipped[i], &clipped[j]) {
            (Some(a), Some(b)) => i != j && overlap_area(a, b) > 0.0,
            _ => false,
        }
    };
    let occludes = |j: usize, i: usize| -> bool {
        overlapping(i, j)
            && clipped[j].as_ref().unwrap().bottom - clipped[i].as_ref().unwrap().bottom
                >= params.thre_occ
    };
    let drawn: Vec<bool> = (0..n).map(|i| (0..n).any(|j| overlapping(i, j))).collect();

    let mut covered = vec![0usize; n];
    let mut weighted = vec![0.0; n];
    for y in 0..ih {
        for x in 0..iw {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut gm = 0.0f64;
            for k in 0..n {
                if !drawn[k] {
                    continue;
                }
                let c = clipped[k].as_ref().unwrap();
                if !c.holds(x, y) {
                    continue;
                }
                let sx = (c.r - c.l) / params.k_x;
                let sy = (c.b - c.t) / params.k_y;
                let (cx, cy) = ((c.l + c.r) / 2.0, (c.t + c.b) / 2.0);
                let g = (-((px - cx).powi(2) / (2.0 * sx * sx)
                    + (py - cy).powi(2) / (2.0 * sy * sy)))
                    .exp();
                gm = gm.max(g);
            }
            for i in 0..n {
                let Some(ci) = &clipped[i] else { continue };
                if !ci.holds(x, y) {
                    continue;
                }
                let hidden =
                    (0..n).any(|j| occludes(j, i) && clipped[j].as_ref().unwrap().holds(x, y));
                if hidden {
                    covered[i] += 1;
                    weighted[i] += gm;
                }
            }
        }
    }
    let area = |i: usize| clipped[i].as_ref().map(|c| (c.r - c.l) * (c.b - c.t));
    let ratio = |v: f64, i: usize| match area(i) {
        Some(a) => (v / a).clamp(0.0, 1.0),
        None => 0.0,
    };
    (
        (0..n).map(|i| ratio(covered[i] as f64, i)).collect(),
        (0..n).map(|i| ratio(weighted[i], i)).collect(),
    )
}

// ---------------------------------------------------------------------------
// Assignment oracle

/// Minimum total cost over all injective row-to-column maps (or column-to-row
/// when there are more rows), by exhaustive enumeration.
pub fn brute_force_min(costs: &DMatrix<f64>) -> f64 {
    let (r, c) = costs.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    let m = if r <= c {
        costs.clone()
    } else {
        costs.transpose()
    };
    let mut used = vec![false; m.ncols()];
    fn go(m: &DMatrix<f64>, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == m.nrows() {
            *best = best.min(acc);
            return;
        }
        for col in 0..m.ncols() {
            if !used[col] {
                used[col] = true;
                go(m, row + 1, used, acc + m[(row, col)], best);
                used[col] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(&m, 0, &mut used, 0.0, &mut best);
    best
}

// ---------------------------------------------------------------------------
// Reference SORT+Byte pipeline

struct RefTrack {
    id: u64,
    kf: KalmanState,
    predicted: BBox,
    last: BBox,
    score: f64,
    hits: u32,
    since_update: u32,
}

/// Plain IoU matching with the usual gate, over the solver's full output.
fn iou_match(
    dets: &[BBox],
    targets: &[BBox],
    gate: f64,
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    if dets.is_empty() || targets.is_empty() {
        return (
            Vec::new(),
            (0..dets.len()).collect(),
            (0..targets.len()).collect(),
        );
    }
    let iou = iou_matrix(dets, targets);
    let costs = iou.map(|v| if v < gate { 1e6 } else { 1.0 - v });
    let pairs: Vec<(usize, usize)> = solve(&costs)
        .into_iter()
        .filter(|&(d, t)| iou[(d, t)] >= gate)
        .collect();
    let free_d = (0..dets.len())
        .filter(|d| !pairs.iter().any(|p| p.0 == *d))
        .collect();
    let free_t = (0..targets.len())
        .filter(|t| !pairs.iter().any(|p| p.1 == *t))
        .collect();
    (pairs, free_d, free_t)
}

/// SORT filter, ByteTrack's second pass on low-score detections and a third
/// pass matching leftovers to last observations. Only the threshold, gate and
/// lifecycle fields of `cfg` are read.
pub fn reference_sort_byte(
    cfg: &TrackerConfig,
    frames: &BTreeMap<u32, Vec<Detection>>,
) -> TrackResults {
    let mut results = TrackResults::new();
    let (Some(&first), Some(&last)) = (frames.keys().next(), frames.keys().next_back()) else {
        return results;
    };
    let mut tracks: Vec<RefTrack> = Vec::new();
    let mut next_id = 1u64;
    for frame in first..=last {
        let dets = frames.get(&frame).cloned().unwrap_or_default();
        for t in &mut tracks {
            let p = t.kf.predict();
            t.kf = p.state;
            t.predicted = p.bbox;
        }
        let high: Vec<Detection> = dets
            .iter()
            .filter(|d| d.score >= cfg.high_thresh)
            .copied()
            .collect();
        let low: Vec<Detection> = dets
            .iter()
            .filter(|d| d.score >= cfg.low_thresh && d.score < cfg.high_thresh)
            .copied()
            .collect();
        let live: Vec<usize> = (0..tracks.len())
            .filter(|&i| tracks[i].since_update == 0)
            .collect();
        let lost: Vec<usize> = (0..tracks.len())
            .filter(|&i| tracks[i].since_update > 0)
            .collect();

        let mut assigned: Vec<(usize, Detection)> = Vec::new();
        let high_boxes: Vec<BBox> = high.iter().map(|d| d.bbox).collect();
        let live_boxes: Vec<BBox> = live.iter().map(|&i| tracks[i].predicted).collect();
        let (pairs, mut left_high, free_live) = iou_match(&high_boxes, &live_boxes, cfg.gate);
        assigned.extend(pairs.iter().map(|&(d, t)| (live[t], high[d])));
        let mut free_live: Vec<usize> = free_live.iter().map(|&t| live[t]).collect();

        if cfg.toggles.byte_stage && !low.is_empty() && !free_live.is_empty() {
            let low_boxes: Vec<BBox> = low.iter().map(|d| d.bbox).collect();
            let rest: Vec<BBox> = free_live.iter().map(|&i| tracks[i].predicted).collect();
            let (pairs, _, still_free) = iou_match(&low_boxes, &rest, cfg.gate);
            assigned.extend(pairs.iter().map(|&(d, t)| (free_live[t], low[d])));
            free_live = still_free.iter().map(|&t| free_live[t]).collect();
        }

        if cfg.toggles.third_stage && !left_high.is_empty() {
            let pool: Vec<usize> = free_live.iter().chain(&lost).copied().collect();
            if !pool.is_empty() {
                let leftover: Vec<BBox> = left_high.iter().map(|&d| high[d].bbox).collect();
                let obs: Vec<BBox> = pool.iter().map(|&i| tracks[i].last).collect();
                let (pairs, unmatched, _) = iou_match(&leftover, &obs, cfg.gate);
                assigned.extend(pairs.iter().map(|&(d, t)| (pool[t], high[left_high[d]])));
                left_high = unmatched.iter().map(|&d| left_high[d]).collect();
            }
        }

        let mut hit = vec![false; tracks.len()];
        for (i, det) in assigned {
            let t = &mut tracks[i];
            t.kf = t.kf.update(&det.bbox).expect("reference filter diverged");
            t.last = det.bbox;
            t.score = det.score;
            t.hits += 1;
            t.since_update = 0;
            hit[i] = true;
        }
        let mut keep = Vec::with_capacity(tracks.len());
        for (i, mut t) in tracks.into_iter().enumerate() {
            if !hit[i] {
                t.since_update += 1;
            }
            if t.since_update <= cfg.max_age {
                keep.push(t);
            }
        }
        tracks = keep;
        for &d in &left_high {
            let b = high[d].bbox;
            tracks.push(RefTrack {
                id: next_id,
                kf: KalmanState::new(&b),
                predicted: b,
                last: b,
                score: high[d].score,
                hits: 1,
                since_update: 0,
            });
            next_id += 1;
        }
        let mut out: Vec<TrackOutput> = tracks
            .iter()
            .filter(|t| t.hits >= cfg.min_hits && t.since_update == 0)
            .map(|t| TrackOutput {
                id: t.id,
                bbox: t.kf.to_bbox(),
                score: t.score,
            })
            .collect();
        out.sort_by_key(|o| o.id);
        results.insert(frame, out);
    }
    results
}

// ---------------------------------------------------------------------------
// Scenario helpers

/// Tracker settings used on the synthetic presets: every confirmed match is
/// reported from the first frame so clean runs can score perfectly.
pub fn scenario_config(spec: &ScenarioSpec) -> TrackerConfig {
    TrackerConfig {
        min_hits: 1,
        occlusion: OcclusionParams::default().with_image(spec.image.0, spec.image.1),
        ..TrackerConfig::default()
    }
}

/// `n` pedestrians wandering over a 1920x1080 frame for `frames` frames, with
/// a new waypoint every 50 frames.
pub fn crowd(n: usize, frames: u32, seed: u64) -> ScenarioSpec {
    let mut rng = Rng::new(seed);
    let paths = (0..n)
        .map(|k| {
            let w = rng.range(40.0, 110.0).round();
            let h = (w * rng.range(2.0, 2.8)).round();
            let mut waypoints = Vec::new();
            let mut f = 1;
            loop {
                let cx = rng.range(w, 1920.0 - w).round();
                let cy = rng.range(h, 1080.0 - h).round();
                waypoints.push(Waypoint::new(f, cx, cy, w, h));
                if f == frames {
                    break;
                }
                f = (f + 50).min(frames);
            }
            ObjectPath {
                id: k as u64 + 1,
                waypoints,
            }
        })
        .collect();
    ScenarioSpec {
        name: format!("crowd-{n}"),
        n_frames: frames,
        image: (1920, 1080),
        paths,
        noise: 1.0,
        occlusion_corruption: Some(Default::default()),
        thre_occ: 5.0,
        seed,
    }
}

/// A filter state reached by a random number of predict/update steps from a
/// random box, together with a noisy measurement near its prediction.
pub fn random_state(rng: &mut Rng) -> (KalmanState, BBox) {
    let mut b = random_box(rng, 400.0);
    let mut st = KalmanState::new(&b);
    for _ in 0..rng.below(8) {
        let (dx, dy) = (rng.range(-6.0, 6.0), rng.range(-6.0, 6.0));
        b = BBox::new(b.left() + dx, b.top() + dy, b.right() + dx, b.bottom() + dy).unwrap();
        st = st.predict().state.update(&b).unwrap();
    }
    let st = st.predict().state;
    let p = st.to_bbox();
    let j = |rng: &mut Rng| rng.range(-8.0, 8.0);
    let z = BBox::new(
        p.left() + j(rng),
        p.top() + j(rng),
        p.right() + j(rng) + 10.0,
        p.bottom() + j(rng) + 10.0,
    )
    .unwrap();
    (st, z)
}

/// Mean after `x + bam·K (z - H x)` with the gain from an explicit inverse.
pub fn scaled_innovation_mean(st: &KalmanState, z: &BBox, bam: f64) -> oasort::kalman::StateVector {
    use oasort::kalman::{bbox_to_measurement, measurement_noise, observation_model};
    let h = observation_model();
    let s = h * st.covariance * h.transpose() + measurement_noise();
    let k = st.covariance * h.transpose() * s.try_inverse().unwrap();
    st.mean + k * (bbox_to_measurement(z) - h * st.mean) * bam
}

/// Writes the scenario, tracks from the written detections, writes the
/// results and scores them from disk. Returns the results file and the
/// metrics row.
pub fn disk_round_trip(
    spec: &ScenarioSpec,
    cfg: TrackerConfig,
    dir: &std::path::Path,
) -> (String, String) {
    use oasort::metrics::evaluate;
    use oasort::mot::{detection_lists, parse_annotations, parse_detections, write_results};
    use oasort::synth::{generate, write_scenario};
    use oasort::tracker::run_sequence;

    write_scenario(spec, &generate(spec).unwrap(), dir).unwrap();
    let dets = detection_lists(&parse_detections(dir.join("det.txt")).unwrap());
    let mut tracker = oasort::Tracker::new(cfg).unwrap();
    let out = dir.join("results.txt");
    write_results(&out, &run_sequence(&mut tracker, &dets).unwrap()).unwrap();
    let gt = parse_annotations(dir.join("gt.txt")).unwrap();
    let pred = parse_annotations(&out).unwrap();
    let summary = evaluate(&gt, &pred, oasort::metrics::DEFAULT_IOU_MATCH).unwrap();
    (std::fs::read_to_string(out).unwrap(), summary.csv_row())
}
