//! Plain-Rust bodies of the browser exports, testable off the browser.

use oasort::metrics::{evaluate, DEFAULT_IOU_MATCH};
use oasort::mot::results_to_annotations;
use oasort::occlusion::{raw_coefficients, refined_coefficients, GaussianMap, OcclusionParams};
use oasort::synth::{generate, preset};
use oasort::tracker::run_sequence;
use oasort::{BBox, Tracker, TrackerConfig};
use serde_json::{json, Value};

fn parse_boxes(json: &str) -> Result<Vec<BBox>, String> {
    let raw: Vec<[f64; 4]> = serde_json::from_str(json).map_err(|e| format!("boxes: {e}"))?;
    raw.iter()
        .map(|&[l, t, r, b]| BBox::new(l, t, r, b).map_err(|e| e.to_string()))
        .collect()
}

fn params(width: u32, height: u32, thre: f64, kx: f64, ky: f64) -> Result<OcclusionParams, String> {
    let p = OcclusionParams {
        thre_occ: thre,
        k_x: kx,
        k_y: ky,
        ..OcclusionParams::default().with_image(width, height)
    };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// Raw and refined coefficients of `[[l, t, r, b], ...]`, plus for every box
/// the indices of the boxes in front of it.
pub fn occlusion_field(
    boxes: &str,
    width: u32,
    height: u32,
    thre: f64,
    kx: f64,
    ky: f64,
) -> Result<String, String> {
    let boxes = parse_boxes(boxes)?;
    let p = params(width, height, thre, kx, ky)?;
    let report = refined_coefficients(&boxes, &p);
    let occluders: Vec<Vec<usize>> = (0..boxes.len())
        .map(|i| {
            (0..boxes.len())
                .filter(|&j| report.relation[(i, j)])
                .collect()
        })
        .collect();
    Ok(json!({
        "raw": raw_coefficients(&boxes, &p),
        "refined": report.coefficients,
        "occluders": occluders,
    })
    .to_string())
}

/// The Gaussian map as RGBA bytes, row-major, intensity in the alpha channel.
pub fn gaussian_map_rgba(
    boxes: &str,
    width: u32,
    height: u32,
    kx: f64,
    ky: f64,
) -> Result<Vec<u8>, String> {
    let boxes = parse_boxes(boxes)?;
    let p = params(width, height, OcclusionParams::default().thre_occ, kx, ky)?;
    let gm = GaussianMap::render(&boxes, &p);
    Ok(gm
        .as_slice()
        .iter()
        .flat_map(|&v| [255, 120, 0, (v * 200.0).round() as u8])
        .collect())
}

fn corners(b: &BBox) -> [f64; 4] {
    [b.left(), b.top(), b.right(), b.bottom()]
}

/// Tracks a canonical scenario with the given component switches. Returns the
/// image size, every frame's ground truth, detections and tracks, and the
/// sequence metrics.
pub fn run_preset(name: &str, oao: bool, bam: bool, gm: bool) -> Result<String, String> {
    let spec = preset(name).map_err(|e| e.to_string())?;
    let scenario = generate(&spec).map_err(|e| e.to_string())?;
    let mut cfg = TrackerConfig {
        min_hits: 1,
        occlusion: OcclusionParams::default().with_image(spec.image.0, spec.image.1),
        ..TrackerConfig::default()
    };
    cfg.toggles.oao = oao;
    cfg.toggles.bam = bam;
    cfg.toggles.gm = gm;
    let mut tracker = Tracker::new(cfg).map_err(|e| e.to_string())?;
    let results = run_sequence(&mut tracker, &scenario.dets).map_err(|e| e.to_string())?;
    let summary = evaluate(
        &scenario.gt,
        &results_to_annotations(&results),
        DEFAULT_IOU_MATCH,
    )
    .map_err(|e| e.to_string())?;

    let frames: Vec<Value> = (1..=spec.n_frames)
        .map(|f| {
            let gt = scenario.gt.get(&f).map(Vec::as_slice).unwrap_or(&[]);
            let oc = scenario.gt_occlusion.get(&f).map(Vec::as_slice).unwrap_or(&[]);
            let dets = scenario.dets.get(&f).map(Vec::as_slice).unwrap_or(&[]);
            let tracks = results.get(&f).map(Vec::as_slice).unwrap_or(&[]);
            json!({
                "frame": f,
                "gt": gt.iter().zip(oc).map(|((id, b), oc)| json!({"id": id, "box": corners(b), "oc": oc})).collect::<Vec<_>>(),
                "dets": dets.iter().map(|d| json!({"box": corners(&d.bbox), "score": d.score})).collect::<Vec<_>>(),
                "tracks": tracks.iter().map(|t| json!({"id": t.id, "box": corners(&t.bbox)})).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "image": [spec.image.0, spec.image.1],
        "frames": frames,
        "metrics": summary,
    })
    .to_string())
}
