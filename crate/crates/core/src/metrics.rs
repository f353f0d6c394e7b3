//! CLEAR-MOT accuracy and identity F1.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{hungarian, hungarian::solve, CostMatrix};
use crate::geometry::{iou_matrix, BBox};
use crate::mot::Annotations;

pub const DEFAULT_IOU_MATCH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ground truth contains no boxes")]
    EmptyGroundTruth,
    #[error("match threshold {0} lies outside [0, 1]")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mota: f64,
    pub idf1: f64,
    pub idsw: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub gt_count: usize,
    /// Frame-level true positives.
    pub matches: usize,
    /// Identity true positives under the global identity matching.
    pub idtp: usize,
}

impl EvalSummary {
    pub const CSV_HEADER: &'static str = "mota,idf1,idsw,fp,fn,gt_count,matches,idtp";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{},{},{},{},{},{}",
            self.mota,
            self.idf1,
            self.idsw,
            self.fp,
            self.fn_,
            self.gt_count,
            self.matches,
            self.idtp
        )
    }
}

fn boxes(items: &[(u64, BBox)]) -> Vec<BBox> {
    items.iter().map(|(_, b)| *b).collect()
}

/// Scores `pred` against `gt`. Per frame, ground truth and predictions are
/// matched by minimum `1 - IoU` among pairs with IoU at least
/// `iou_match_thresh`. An identity switch is charged whenever a ground-truth
/// identity is matched to a different prediction id than at its previous
/// match. IDF1 uses the one-to-one identity matching maximizing the number of
/// frames in which the paired identities overlap above the threshold.
pub fn evaluate(
    gt: &Annotations,
    pred: &Annotations,
    iou_match_thresh: f64,
) -> Result<EvalSummary, EvalError> {
    if !(0.0..=1.0).contains(&iou_match_thresh) {
        return Err(EvalError::Threshold(iou_match_thresh));
    }
    let gt_count: usize = gt.values().map(Vec::len).sum();
    if gt_count == 0 {
        return Err(EvalError::EmptyGroundTruth);
    }
    let pred_count: usize = pred.values().map(Vec::len).sum();

    let mut frames: Vec<u32> = gt.keys().chain(pred.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let empty = Vec::new();
    let mut matches = 0usize;
    let mut idsw = 0usize;
    let mut last_match: HashMap<u64, u64> = HashMap::new();
    let mut overlap_frames: BTreeMap<(u64, u64), usize> = BTreeMap::new();

    for frame in frames {
        let g = gt.get(&frame).unwrap_or(&empty);
        let p = pred.get(&frame).unwrap_or(&empty);
        if g.is_empty() || p.is_empty() {
            continue;
        }
        let ious = iou_matrix(&boxes(g), &boxes(p));
        for (i, (gid, _)) in g.iter().enumerate() {
            for (j, (pid, _)) in p.iter().enumerate() {
                if ious[(i, j)] >= iou_match_thresh {
                    *overlap_frames.entry((*gid, *pid)).or_default() += 1;
                }
            }
        }
        let m = hungarian(&CostMatrix::from_scores(&ious, iou_match_thresh));
        matches += m.pairs.len();
        for &(i, j) in &m.pairs {
            let (gid, pid) = (g[i].0, p[j].0);
            if let Some(prev) = last_match.insert(gid, pid) {
                if prev != pid {
                    idsw += 1;
                }
            }
        }
    }

    let fn_ = gt_count - matches;
    let fp = pred_count - matches;
    let mota = 1.0 - (fn_ + fp + idsw) as f64 / gt_count as f64;

    let idtp = identity_true_positives(&overlap_frames);
    let idf1 = 2.0 * idtp as f64 / (gt_count + pred_count) as f64;

    Ok(EvalSummary {
        mota,
        idf1,
        idsw,
        fp,
        fn_,
        gt_count,
        matches,
        idtp,
    })
}

fn identity_true_positives(overlap: &BTreeMap<(u64, u64), usize>) -> usize {
    if overlap.is_empty() {
        return 0;
    }
    let mut gt_ids: Vec<u64> = overlap.keys().map(|k| k.0).collect();
    let mut pred_ids: Vec<u64> = overlap.keys().map(|k| k.1).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    pred_ids.sort_unstable();
    pred_ids.dedup();
    let best = *overlap.values().max().unwrap_or(&0) as f64;
    let weights = DMatrix::from_fn(gt_ids.len(), pred_ids.len(), |i, j| {
        overlap.get(&(gt_ids[i], pred_ids[j])).copied().unwrap_or(0) as f64
    });
    let costs = weights.map(|w| best - w);
    solve(&costs)
        .into_iter()
        .map(|(i, j)| weights[(i, j)] as usize)
        .sum()
}
