use std::path::PathBuf;
use std::time::Duration;

use oasort::tracker::Toggles;
use oasort::TrackerConfig;
use serde::{Deserialize, Serialize};

/// Per-frame wall-clock statistics in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTimes {
    pub frames: usize,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub max_ms: f64,
}

impl FrameTimes {
    pub fn from_durations(times: &[Duration]) -> Self {
        let mut ms: Vec<f64> = times.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let total: f64 = ms.iter().sum();
        let n = ms.len();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => ms[n / 2],
            _ => (ms[n / 2 - 1] + ms[n / 2]) / 2.0,
        };
        Self {
            frames: n,
            total_ms: total,
            mean_ms: if n == 0 { 0.0 } else { total / n as f64 },
            median_ms: median,
            max_ms: ms.last().copied().unwrap_or(0.0),
        }
    }
}

/// Written next to every `track` result; the config and input are enough to
/// rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: TrackerConfig,
    pub toggles: Toggles,
    pub detections: PathBuf,
    pub results: PathBuf,
    pub timing: FrameTimes,
}

impl RunManifest {
    pub fn new(
        config: TrackerConfig,
        detections: PathBuf,
        results: PathBuf,
        timing: FrameTimes,
    ) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            toggles: config.toggles,
            detections,
            results,
            timing,
        }
    }
}
