//! Assignment between detections (rows) and tracks (columns).
//!
//! Every stage builds a spatial-consistency score `S` per pair, forbids pairs
//! with `S < gate`, and solves the assignment on `Cost = 1 - S`. Stage one
//! blends in the occlusion state of the track estimates; stages two and three
//! use plain IoU.

pub mod hungarian;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::detection::Detection;
use crate::geometry::{iou_matrix, BBox};

/// Cost assigned to forbidden pairs; dominates any feasible `1 - S`.
pub const GATED_COST: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssociationError {
    #[error("blend coefficient tau={0} lies outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("{estimates} track estimates but {coefficients} occlusion coefficients")]
    LengthMismatch {
        estimates: usize,
        coefficients: usize,
    },
}

/// Which association pass a score is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// High-score detections against live track estimates.
    High,
    /// Low-score detections against the estimates left over from stage one.
    Low,
    /// Leftover high-score detections against last observations of lost tracks.
    Recovery,
}

/// Additional score added to `S` before gating, e.g. appearance or
/// confidence cues. Implementations must keep `|score| <= 1`.
pub trait ScoreHook: Send + Sync {
    fn score(&self, stage: Stage, det: &Detection, target: &BBox) -> f64;
}

/// The default hook: contributes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoScore;

impl ScoreHook for NoScore {
    fn score(&self, _stage: Stage, _det: &Detection, _target: &BBox) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    /// `1 - S` for feasible pairs, [`GATED_COST`] otherwise.
    pub values: DMatrix<f64>,
    pub gate: f64,
}

impl CostMatrix {
    pub fn from_scores(scores: &DMatrix<f64>, gate: f64) -> Self {
        let values = scores.map(|s| if s < gate { GATED_COST } else { 1.0 - s });
        Self { values, gate }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_feasible(&self, row: usize, col: usize) -> bool {
        self.values[(row, col)] < GATED_COST
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// `(detection, track)` index pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_dets: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Solves the assignment and drops gated pairs into the unmatched sets.
pub fn hungarian(c: &CostMatrix) -> Matching {
    let pairs: Vec<(usize, usize)> = hungarian::solve(&c.values)
        .into_iter()
        .filter(|&(d, t)| c.is_feasible(d, t))
        .collect();
    let mut det_used = vec![false; c.rows()];
    let mut track_used = vec![false; c.cols()];
    for &(d, t) in &pairs {
        det_used[d] = true;
        track_used[t] = true;
    }
    Matching {
        pairs,
        unmatched_dets: (0..c.rows()).filter(|&d| !det_used[d]).collect(),
        unmatched_tracks: (0..c.cols()).filter(|&t| !track_used[t]).collect(),
    }
}

/// `S[i][j] = tau·(1 - oc_est[j]) + (1 - tau)·iou[i][j]`.
pub fn oao_scores(
    iou: &DMatrix<f64>,
    oc_est: &[f64],
    tau: f64,
) -> Result<DMatrix<f64>, AssociationError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(AssociationError::TauOutOfRange(tau));
    }
    if oc_est.len() != iou.ncols() {
        return Err(AssociationError::LengthMismatch {
            estimates: iou.ncols(),
            coefficients: oc_est.len(),
        });
    }
    Ok(DMatrix::from_fn(iou.nrows(), iou.ncols(), |i, j| {
        tau * (1.0 - oc_est[j]) + (1.0 - tau) * iou[(i, j)]
    }))
}

/// Momentum weight for a low-score match: IoU between prediction and
/// detection, damped by the occlusion of the track's previous observation.
pub fn compute_bam(pred: &BBox, det: &BBox, oc_last: f64) -> f64 {
    (pred.iou(det) * (1.0 - oc_last.clamp(0.0, 1.0))).clamp(0.0, 1.0)
}

fn with_hook(
    mut scores: DMatrix<f64>,
    stage: Stage,
    dets: &[Detection],
    targets: &[BBox],
    hook: &dyn ScoreHook,
) -> DMatrix<f64> {
    for (i, det) in dets.iter().enumerate() {
        for (j, target) in targets.iter().enumerate() {
            scores[(i, j)] += hook.score(stage, det, target);
        }
    }
    scores
}

fn boxes(dets: &[Detection]) -> Vec<BBox> {
    dets.iter().map(|d| d.bbox).collect()
}

pub fn build_stage1_costs(
    high_dets: &[Detection],
    track_estimates: &[BBox],
    oc_est: &[f64],
    tau: f64,
    gate: f64,
    hook: &dyn ScoreHook,
) -> Result<CostMatrix, AssociationError> {
    let iou = iou_matrix(&boxes(high_dets), track_estimates);
    let scores = oao_scores(&iou, oc_est, tau)?;
    let scores = with_hook(scores, Stage::High, high_dets, track_estimates, hook);
    Ok(CostMatrix::from_scores(&scores, gate))
}

pub fn build_stage2_costs(
    low_dets: &[Detection],
    remaining_estimates: &[BBox],
    gate: f64,
    hook: &dyn ScoreHook,
) -> CostMatrix {
    let iou = iou_matrix(&boxes(low_dets), remaining_estimates);
    let scores = with_hook(iou, Stage::Low, low_dets, remaining_estimates, hook);
    CostMatrix::from_scores(&scores, gate)
}

pub fn build_stage3_costs(
    leftover_dets: &[Detection],
    lost_track_last_observations: &[BBox],
    gate: f64,
    hook: &dyn ScoreHook,
) -> CostMatrix {
    let iou = iou_matrix(&boxes(leftover_dets), lost_track_last_observations);
    let scores = with_hook(
        iou,
        Stage::Recovery,
        leftover_dets,
        lost_track_last_observations,
        hook,
    );
    CostMatrix::from_scores(&scores, gate)
}
