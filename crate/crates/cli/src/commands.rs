use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use oasort::metrics::{evaluate, EvalSummary};
use oasort::mot::{
    detection_lists, parse_annotations, parse_detections, results_to_annotations, write_results,
    write_text,
};
use oasort::synth::{generate, preset, write_scenario};
use oasort::tracker::{ablation_variant, run_sequence_timed, AblationPreset, TrackResults};
use oasort::{Tracker, TrackerConfig};

use crate::manifest::{FrameTimes, RunManifest};

fn track_file(cfg: TrackerConfig, det: &Path) -> Result<(TrackResults, FrameTimes)> {
    let dets = detection_lists(&parse_detections(det)?);
    let mut tracker = Tracker::new(cfg)?;
    let mut times: Vec<Duration> = Vec::new();
    let results = run_sequence_timed(&mut tracker, &dets, |_, d| times.push(d))?;
    Ok((results, FrameTimes::from_durations(&times)))
}

pub fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn track(cfg: TrackerConfig, det: &Path, out: &Path, manifest: Option<&Path>) -> Result<()> {
    let (results, timing) = track_file(cfg, det)?;
    write_results(out, &results)?;
    let manifest_path = manifest
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_manifest_path(out));
    let m = RunManifest::new(cfg, det.to_path_buf(), out.to_path_buf(), timing);
    write_text(&manifest_path, &(serde_json::to_string_pretty(&m)? + "\n"))?;
    let tracks: std::collections::BTreeSet<u64> =
        results.values().flatten().map(|o| o.id).collect();
    println!(
        "{} frames, {} tracks, {:.3} ms/frame -> {}",
        m.timing.frames,
        tracks.len(),
        m.timing.mean_ms,
        out.display()
    );
    Ok(())
}

pub fn eval(gt: &Path, pred: &Path, iou: f64, csv: Option<&Path>) -> Result<EvalSummary> {
    let gt = parse_annotations(gt)?;
    let pred = parse_annotations(pred)?;
    let s = evaluate(&gt, &pred, iou)?;
    println!("MOTA  {:.4}", s.mota);
    println!("IDF1  {:.4}", s.idf1);
    println!("IDSW  {}", s.idsw);
    println!("FP    {}", s.fp);
    println!("FN    {}", s.fn_);
    if let Some(path) = csv {
        write_text(
            path,
            &format!("{}\n{}\n", EvalSummary::CSV_HEADER, s.csv_row()),
        )?;
    }
    Ok(s)
}

pub const ABLATION_HEADER: &str = "preset,oao,bam,gm,mota,idf1,idsw,ms_per_frame";

/// Tracks `det` under every ablation row, writing `<row>.txt` results and
/// `ablation.csv` into `out_dir`. Returns the CSV text.
pub fn ablate(
    base: TrackerConfig,
    det: &Path,
    gt: &Path,
    out_dir: &Path,
    iou: f64,
) -> Result<String> {
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let truth = parse_annotations(gt)?;
    let mut csv = format!("{ABLATION_HEADER}\n");
    for row in AblationPreset::ALL {
        let cfg = ablation_variant(&base, row);
        let (results, timing) = track_file(cfg, det)?;
        write_results(out_dir.join(format!("{}.txt", file_stem(row))), &results)?;
        let s = evaluate(&truth, &results_to_annotations(&results), iou)?;
        let (oao, bam, gm) = row.switches();
        let _ = writeln!(
            csv,
            "{row},{oao},{bam},{gm},{:.6},{:.6},{},{:.4}",
            s.mota, s.idf1, s.idsw, timing.mean_ms
        );
    }
    write_text(out_dir.join("ablation.csv"), &csv)?;
    print!("{csv}");
    Ok(csv)
}

/// File-name form of a row name: `+oao+gm` becomes `oao_gm`.
pub fn file_stem(row: AblationPreset) -> String {
    row.name().trim_start_matches('+').replace('+', "_")
}

pub fn synth(name: &str, out_dir: &Path) -> Result<()> {
    let spec = preset(name)?;
    write_scenario(&spec, &generate(&spec)?, out_dir)?;
    println!("{name}: {} frames -> {}", spec.n_frames, out_dir.display());
    Ok(())
}
