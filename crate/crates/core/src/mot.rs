//! MOTChallenge CSV files.
//!
//! Input lines are `frame,id,bb_left,bb_top,bb_width,bb_height,conf[,x,y,z]`
//! with no header. Results are written as
//! `frame,id,bb_left,bb_top,bb_width,bb_height,score,-1,-1,-1` with two
//! decimals, sorted by frame then id.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::detection::Detection;
use crate::geometry::BBox;
use crate::tracker::TrackResults;

#[derive(Debug, Error)]
pub enum MotError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One parsed line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    pub id: i64,
    pub bbox: BBox,
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDetections {
    pub frame: u32,
    pub items: Vec<Detection>,
}

/// Identity-labelled boxes per frame, as used for ground truth and results.
pub type Annotations = BTreeMap<u32, Vec<(u64, BBox)>>;

pub fn parse_rows(text: &str) -> Result<Vec<MotRow>, MotError> {
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() < 7 {
            return Err(MotError::Parse {
                line,
                message: format!("expected at least 7 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64, MotError> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| MotError::Parse {
                    line,
                    message: format!("{name} {:?} is not a number", fields[i]),
                })
        };
        let frame = num(0, "frame")?;
        if frame < 1.0 || frame.fract() != 0.0 || frame > u32::MAX as f64 {
            return Err(MotError::Parse {
                line,
                message: format!("frame {:?} is not a positive integer", fields[0]),
            });
        }
        let id = num(1, "id")?;
        if id.fract() != 0.0 {
            return Err(MotError::Parse {
                line,
                message: format!("id {:?} is not an integer", fields[1]),
            });
        }
        let (l, t, w, h) = (
            num(2, "bb_left")?,
            num(3, "bb_top")?,
            num(4, "bb_width")?,
            num(5, "bb_height")?,
        );
        if w <= 0.0 || h <= 0.0 {
            return Err(MotError::Parse {
                line,
                message: format!("non-positive extent {w}x{h}"),
            });
        }
        let bbox = BBox::from_ltwh(l, t, w, h).map_err(|e| MotError::Parse {
            line,
            message: e.to_string(),
        })?;
        rows.push(MotRow {
            frame: frame as u32,
            id: id as i64,
            bbox,
            conf: num(6, "conf")?,
        });
    }
    Ok(rows)
}

fn read(path: &Path) -> Result<String, MotError> {
    fs::read_to_string(path).map_err(|source| MotError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn detections_from_rows(rows: &[MotRow]) -> BTreeMap<u32, FrameDetections> {
    let mut map: BTreeMap<u32, FrameDetections> = BTreeMap::new();
    for r in rows {
        map.entry(r.frame)
            .or_insert_with(|| FrameDetections {
                frame: r.frame,
                items: Vec::new(),
            })
            .items
            .push(Detection::new(r.bbox, r.conf));
    }
    map
}

pub fn parse_detections(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<u32, FrameDetections>, MotError> {
    Ok(detections_from_rows(&parse_rows(&read(path.as_ref())?)?))
}

/// Detections regrouped as the plain per-frame lists the tracker consumes.
pub fn detection_lists(map: &BTreeMap<u32, FrameDetections>) -> BTreeMap<u32, Vec<Detection>> {
    map.iter().map(|(&f, fd)| (f, fd.items.clone())).collect()
}

/// Reads a ground-truth or result file, keeping identities. Rows with a
/// negative id are rejected.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<Annotations, MotError> {
    let rows = parse_rows(&read(path.as_ref())?)?;
    let mut map = Annotations::new();
    for (n, r) in rows.iter().enumerate() {
        if r.id < 0 {
            return Err(MotError::Parse {
                line: n + 1,
                message: format!("identity {} is negative", r.id),
            });
        }
        map.entry(r.frame).or_default().push((r.id as u64, r.bbox));
    }
    Ok(map)
}

pub fn results_to_annotations(results: &TrackResults) -> Annotations {
    results
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&f, v)| (f, v.iter().map(|o| (o.id, o.bbox)).collect()))
        .collect()
}

fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// One output line per `(frame, id, box, score)`, sorted by frame then id.
pub fn format_rows<'a>(rows: impl IntoIterator<Item = (u32, i64, &'a BBox, f64)>) -> String {
    let mut rows: Vec<_> = rows.into_iter().collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::new();
    for (frame, id, b, score) in rows {
        let _ = writeln!(
            out,
            "{frame},{id},{},{},{},{},{},-1,-1,-1",
            fixed2(b.left()),
            fixed2(b.top()),
            fixed2(b.width()),
            fixed2(b.height()),
            fixed2(score)
        );
    }
    out
}

pub fn format_results(results: &TrackResults) -> String {
    format_rows(
        results
            .iter()
            .flat_map(|(&f, v)| v.iter().map(move |o| (f, o.id as i64, &o.bbox, o.score))),
    )
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<(), MotError> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|source| MotError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_results(path: impl AsRef<Path>, results: &TrackResults) -> Result<(), MotError> {
    write_text(path, &format_results(results))
}
