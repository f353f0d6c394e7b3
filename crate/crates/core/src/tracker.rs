//! Per-frame tracking pipeline.
//!
//! Each [`Tracker::step`]:
//!
//! 1. predicts every track one frame ahead;
//! 2. estimates the occlusion of the live tracks' predictions (when the offset
//!    is enabled);
//! 3. matches high-score detections to live tracks on the occlusion-offset
//!    score;
//! 4. matches low-score detections to the live tracks left over, updating them
//!    with momentum-weighted corrections;
//! 5. reconnects lost tracks with leftover high-score detections through
//!    their last observations;
//! 6. spawns tracks for unmatched high-score detections and ages the rest;
//! 7. caches the occlusion of the matched tracks' new observations for the
//!    next frame's momentum weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{
    build_stage1_costs, build_stage2_costs, build_stage3_costs, compute_bam, hungarian,
    AssociationError, NoScore, ScoreHook,
};
use crate::detection::Detection;
use crate::geometry::BBox;
use crate::kalman::{KalmanError, KalmanState};
use crate::occlusion::{refined_coefficients, OcclusionParams, OcclusionParamsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("frame {got} does not follow frame {previous}")]
    FrameOrder { previous: u32, got: u32 },
    #[error("invalid tracker configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Occlusion(#[from] OcclusionParamsError),
    #[error("track {id}: {source}")]
    Filter { id: u64, source: KalmanError },
    #[error(transparent)]
    Association(#[from] AssociationError),
}

/// Component switches; each mirrors one ablation column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    /// Occlusion-aware offset in the first association stage.
    pub oao: bool,
    /// Momentum-weighted updates for low-score matches.
    pub bam: bool,
    /// Gaussian refinement of occlusion coefficients.
    pub gm: bool,
    /// Second stage on low-score detections.
    pub byte_stage: bool,
    /// Third stage reconnecting lost tracks through their last observations.
    pub third_stage: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            oao: true,
            bam: true,
            gm: true,
            byte_stage: true,
            third_stage: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Weight of the occlusion term in the first-stage score.
    pub tau: f64,
    pub occlusion: OcclusionParams,
    /// Detections scoring at least this are high-score.
    pub high_thresh: f64,
    /// Detections below this are discarded; the rest of the band is low-score.
    pub low_thresh: f64,
    /// Pairs whose score falls below this are never matched.
    pub gate: f64,
    /// Frames a track may go unmatched before removal.
    pub max_age: u32,
    /// Matches needed before a track is reported.
    pub min_hits: u32,
    pub toggles: Toggles,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            tau: 0.15,
            occlusion: OcclusionParams::default(),
            high_thresh: 0.6,
            low_thresh: 0.1,
            gate: 0.25,
            max_age: 30,
            min_hits: 3,
            toggles: Toggles::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.tau) {
            return Err(TrackerError::Config(format!(
                "tau {} outside [0, 1]",
                self.tau
            )));
        }
        if !unit(self.gate) {
            return Err(TrackerError::Config(format!(
                "gate {} outside [0, 1]",
                self.gate
            )));
        }
        if !(self.low_thresh >= 0.0
            && self.low_thresh < self.high_thresh
            && self.high_thresh <= 1.0)
        {
            return Err(TrackerError::Config(format!(
                "need 0 <= low_thresh < high_thresh <= 1, got {} and {}",
                self.low_thresh, self.high_thresh
            )));
        }
        if self.max_age < 1 {
            return Err(TrackerError::Config("max_age must be at least 1".into()));
        }
        if self.min_hits < 1 {
            return Err(TrackerError::Config("min_hits must be at least 1".into()));
        }
        self.occlusion.validate()?;
        Ok(())
    }

    /// Occlusion parameters with the refinement switch taken from the toggles.
    fn oam_params(&self) -> OcclusionParams {
        OcclusionParams {
            use_gm: self.toggles.gm,
            ..self.occlusion
        }
    }
}

/// Rows of the component ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AblationPreset {
    Baseline,
    Oao,
    OaoGm,
    OaoBam,
    Full,
}

impl AblationPreset {
    pub const ALL: [AblationPreset; 5] = [
        AblationPreset::Baseline,
        AblationPreset::Oao,
        AblationPreset::OaoGm,
        AblationPreset::OaoBam,
        AblationPreset::Full,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationPreset::Baseline => "baseline",
            AblationPreset::Oao => "+oao",
            AblationPreset::OaoGm => "+oao+gm",
            AblationPreset::OaoBam => "+oao+bam",
            AblationPreset::Full => "full",
        }
    }

    /// `(oao, bam, gm)` for this row.
    pub fn switches(&self) -> (bool, bool, bool) {
        match self {
            AblationPreset::Baseline => (false, false, false),
            AblationPreset::Oao => (true, false, false),
            AblationPreset::OaoGm => (true, false, true),
            AblationPreset::OaoBam => (true, true, false),
            AblationPreset::Full => (true, true, true),
        }
    }
}

impl fmt::Display for AblationPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown ablation preset {0:?}; expected baseline, +oao, +oao+gm, +oao+bam or full")]
pub struct UnknownPreset(pub String);

impl FromStr for AblationPreset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AblationPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}

/// Returns `cfg` with the component toggles of `preset`; the stage toggles are
/// left as they are.
pub fn ablation_variant(cfg: &TrackerConfig, preset: AblationPreset) -> TrackerConfig {
    let (oao, bam, gm) = preset.switches();
    TrackerConfig {
        toggles: Toggles {
            oao,
            bam,
            gm,
            ..cfg.toggles
        },
        ..*cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub kf: KalmanState,
    /// Most recent matched detection box.
    pub last_observation: BBox,
    /// Refined occlusion coefficient of `last_observation`.
    pub oc_last: f64,
    /// Score of the most recent matched detection.
    pub score: f64,
    pub hits: u32,
    pub age: u32,
    pub time_since_update: u32,
    pub status: TrackStatus,
    predicted: BBox,
}

impl Track {
    fn new(id: u64, det: &Detection) -> Self {
        Self {
            id,
            kf: KalmanState::new(&det.bbox),
            last_observation: det.bbox,
            oc_last: 0.0,
            score: det.score,
            hits: 1,
            age: 0,
            time_since_update: 0,
            status: TrackStatus::Tentative,
            predicted: det.bbox,
        }
    }

    /// Prediction made at the start of the latest step.
    pub fn predicted(&self) -> BBox {
        self.predicted
    }

    pub fn bbox(&self) -> BBox {
        self.kf.to_bbox()
    }
}

/// One reported track in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    pub score: f64,
}

pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
    hook: Box<dyn ScoreHook>,
}

impl fmt::Debug for Tracker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tracker")
            .field("cfg", &self.cfg)
            .field("tracks", &self.tracks)
            .field("next_id", &self.next_id)
            .field("last_frame", &self.last_frame)
            .finish_non_exhaustive()
    }
}

enum Correction {
    Standard,
    Momentum(f64),
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            hook: Box::new(NoScore),
        })
    }

    pub fn with_score_hook(mut self, hook: Box<dyn ScoreHook>) -> Self {
        self.hook = hook;
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Tracks still held by the tracker (removed tracks are dropped).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn step(
        &mut self,
        frame: u32,
        detections: &[Detection],
    ) -> Result<Vec<TrackOutput>, TrackerError> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(TrackerError::FrameOrder {
                    previous,
                    got: frame,
                });
            }
        }
        self.last_frame = Some(frame);
        let cfg = self.cfg;
        let toggles = cfg.toggles;

        for t in &mut self.tracks {
            let p = t.kf.predict();
            t.kf = p.state;
            t.predicted = p.bbox;
            t.age += 1;
        }

        let high: Vec<Detection> = detections
            .iter()
            .filter(|d| d.score >= cfg.high_thresh)
            .copied()
            .collect();
        let low: Vec<Detection> = detections
            .iter()
            .filter(|d| d.score >= cfg.low_thresh && d.score < cfg.high_thresh)
            .copied()
            .collect();

        let live: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].time_since_update == 0)
            .collect();
        let lost: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].time_since_update > 0)
            .collect();

        // Stage 1: high-score detections against live estimates.
        let estimates: Vec<BBox> = live.iter().map(|&i| self.tracks[i].predicted).collect();
        let (oc_est, tau) = if toggles.oao {
            (
                refined_coefficients(&estimates, &cfg.oam_params()).coefficients,
                cfg.tau,
            )
        } else {
            (vec![0.0; estimates.len()], 0.0)
        };
        let costs = build_stage1_costs(
            &high,
            &estimates,
            &oc_est,
            tau,
            cfg.gate,
            self.hook.as_ref(),
        )?;
        let first = hungarian(&costs);

        let mut updates: Vec<(usize, Detection, Correction)> = first
            .pairs
            .iter()
            .map(|&(d, t)| (live[t], high[d], Correction::Standard))
            .collect();
        let mut unmatched_live: Vec<usize> =
            first.unmatched_tracks.iter().map(|&t| live[t]).collect();
        let mut leftover_high: Vec<usize> = first.unmatched_dets.clone();

        // Stage 2: low-score detections against the remaining live estimates.
        if toggles.byte_stage && !low.is_empty() && !unmatched_live.is_empty() {
            let remaining: Vec<BBox> = unmatched_live
                .iter()
                .map(|&i| self.tracks[i].predicted)
                .collect();
            let second = hungarian(&build_stage2_costs(
                &low,
                &remaining,
                cfg.gate,
                self.hook.as_ref(),
            ));
            for &(d, t) in &second.pairs {
                let track = &self.tracks[unmatched_live[t]];
                let correction = if toggles.bam {
                    Correction::Momentum(compute_bam(&track.predicted, &low[d].bbox, track.oc_last))
                } else {
                    Correction::Standard
                };
                updates.push((unmatched_live[t], low[d], correction));
            }
            unmatched_live = second
                .unmatched_tracks
                .iter()
                .map(|&t| unmatched_live[t])
                .collect();
        }

        // Stage 3: leftover high-score detections against last observations.
        if toggles.third_stage && !leftover_high.is_empty() {
            let candidates: Vec<usize> =
                unmatched_live.iter().chain(lost.iter()).copied().collect();
            if !candidates.is_empty() {
                let dets: Vec<Detection> = leftover_high.iter().map(|&d| high[d]).collect();
                let observations: Vec<BBox> = candidates
                    .iter()
                    .map(|&i| self.tracks[i].last_observation)
                    .collect();
                let third = hungarian(&build_stage3_costs(
                    &dets,
                    &observations,
                    cfg.gate,
                    self.hook.as_ref(),
                ));
                for &(d, t) in &third.pairs {
                    updates.push((candidates[t], dets[d], Correction::Standard));
                }
                leftover_high = third
                    .unmatched_dets
                    .iter()
                    .map(|&d| leftover_high[d])
                    .collect();
            }
        }

        let mut matched = vec![false; self.tracks.len()];
        for (idx, det, correction) in updates {
            let track = &mut self.tracks[idx];
            let result = match correction {
                Correction::Standard => track.kf.update(&det.bbox),
                Correction::Momentum(bam) => track.kf.update_with_momentum(&det.bbox, bam),
            };
            track.kf = result.map_err(|source| TrackerError::Filter {
                id: track.id,
                source,
            })?;
            track.last_observation = det.bbox;
            track.score = det.score;
            track.hits += 1;
            track.time_since_update = 0;
            matched[idx] = true;
        }

        for (idx, track) in self.tracks.iter_mut().enumerate() {
            if !matched[idx] {
                track.time_since_update += 1;
                if track.time_since_update > cfg.max_age {
                    track.status = TrackStatus::Removed;
                }
            }
        }

        // Persist the occlusion of this frame's observations for the next
        // frame's momentum weights.
        if toggles.bam {
            let matched_idx: Vec<usize> = (0..self.tracks.len()).filter(|&i| matched[i]).collect();
            let observations: Vec<BBox> = matched_idx
                .iter()
                .map(|&i| self.tracks[i].last_observation)
                .collect();
            let report = refined_coefficients(&observations, &cfg.oam_params());
            for (k, &i) in matched_idx.iter().enumerate() {
                self.tracks[i].oc_last = report.coefficients[k];
            }
        }

        self.tracks.retain(|t| t.status != TrackStatus::Removed);

        for &d in &leftover_high {
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track::new(id, &high[d]));
        }

        let mut out = Vec::new();
        for track in &mut self.tracks {
            track.status = if track.hits < cfg.min_hits {
                TrackStatus::Tentative
            } else if track.time_since_update > 0 {
                TrackStatus::Lost
            } else {
                TrackStatus::Confirmed
            };
            if track.status == TrackStatus::Confirmed {
                out.push(TrackOutput {
                    id: track.id,
                    bbox: track.bbox(),
                    score: track.score,
                });
            }
        }
        out.sort_by_key(|o| o.id);
        Ok(out)
    }
}

/// Per-frame tracker output keyed by frame index.
pub type TrackResults = BTreeMap<u32, Vec<TrackOutput>>;

/// Runs `tracker` over every frame from the first to the last key of
/// `frames`, feeding empty detection lists for missing frames.
pub fn run_sequence(
    tracker: &mut Tracker,
    frames: &BTreeMap<u32, Vec<Detection>>,
) -> Result<TrackResults, TrackerError> {
    drive(frames, |frame, dets| tracker.step(frame, dets))
}

/// As [`run_sequence`], reporting each frame's wall-clock duration.
pub fn run_sequence_timed(
    tracker: &mut Tracker,
    frames: &BTreeMap<u32, Vec<Detection>>,
    mut on_frame: impl FnMut(u32, std::time::Duration),
) -> Result<TrackResults, TrackerError> {
    drive(frames, |frame, dets| {
        let start = std::time::Instant::now();
        let out = tracker.step(frame, dets);
        on_frame(frame, start.elapsed());
        out
    })
}

// Kept free of clocks so the untimed path also runs where `Instant` panics.
fn drive(
    frames: &BTreeMap<u32, Vec<Detection>>,
    mut step: impl FnMut(u32, &[Detection]) -> Result<Vec<TrackOutput>, TrackerError>,
) -> Result<TrackResults, TrackerError> {
    let mut results = TrackResults::new();
    let (Some(&first), Some(&last)) = (frames.keys().next(), frames.keys().next_back()) else {
        return Ok(results);
    };
    for frame in first..=last {
        let dets = frames.get(&frame).map(Vec::as_slice).unwrap_or(&[]);
        results.insert(frame, step(frame, dets)?);
    }
    Ok(results)
}
