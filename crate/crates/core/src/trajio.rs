//! TUM trajectory files and timestamp association.
//!
//! A TUM trajectory file holds one pose per line:
//!
//! ```text
//! # timestamp tx ty tz qx qy qz qw
//! 1305031102.175304 1.3405 0.6266 1.6575 0.6574 0.6126 -0.2949 -0.3248
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom3d::{Pose, Rotation, Trajectory};
use crate::{Error, Result};

/// Default association tolerance in seconds, under one frame interval at 30 Hz.
pub const DEFAULT_MAX_TIME_DIFF: f64 = 0.02;

pub fn parse_tum<R: BufRead>(reader: R, id: impl Into<String>) -> Result<Trajectory> {
    let mut poses = Vec::new();
    let mut previous: Option<f64> = None;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 8];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("invalid number {field:?}"),
                })?;
        }
        let [t, tx, ty, tz, qx, qy, qz, qw] = values;
        if let Some(prev) = previous {
            if t <= prev {
                return Err(Error::Ordering {
                    line: line_no,
                    timestamp: t,
                    previous: prev,
                });
            }
        }
        previous = Some(t);
        let rotation = Rotation::from_wxyz(qw, qx, qy, qz).map_err(|e| match e {
            Error::QuaternionNorm { norm } => Error::Parse {
                line: line_no,
                message: format!("quaternion norm {norm} outside accepted range [0.9, 1.1]"),
            },
            other => other,
        })?;
        poses.push(Pose::new(rotation, Vector3::new(tx, ty, tz)).with_timestamp(t));
    }
    if poses.is_empty() {
        return Err(Error::validation("trajectory file contains no poses"));
    }
    Trajectory::new(id, poses)
}

pub fn parse_tum_str(text: &str, id: impl Into<String>) -> Result<Trajectory> {
    parse_tum(text.as_bytes(), id)
}

/// Reads a TUM file; the trajectory id is the file path.
pub fn read_tum_file(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_tum(BufReader::new(file), path.display().to_string())
}

fn fmt_value(v: f64) -> String {
    // "-0" would break byte-stable output
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes the trajectory in TUM format. Timestamps get nine decimals; pose
/// values use the shortest representation that round-trips exactly.
pub fn write_tum<W: Write>(trajectory: &Trajectory, mut writer: W) -> Result<()> {
    for (i, pose) in trajectory.iter().enumerate() {
        let t = pose
            .timestamp
            .ok_or_else(|| Error::validation(format!("pose {i} has no timestamp")))?;
        let [w, x, y, z] = pose.rotation.wxyz();
        let tr = pose.translation;
        writeln!(
            writer,
            "{:.9} {} {} {} {} {} {} {}",
            t,
            fmt_value(tr.x),
            fmt_value(tr.y),
            fmt_value(tr.z),
            fmt_value(x),
            fmt_value(y),
            fmt_value(z),
            fmt_value(w)
        )?;
    }
    Ok(())
}

pub fn write_tum_string(trajectory: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_tum(trajectory, &mut buf)?;
    Ok(String::from_utf8(buf).expect("formatted numbers are ASCII"))
}

pub fn write_tum_file(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path)?);
    write_tum(trajectory, &mut file)?;
    file.flush()?;
    Ok(())
}

/// Matched `(gt_index, est_index)` pairs, sorted by ground-truth index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub pairs: Vec<(usize, usize)>,
    /// Seconds; `None` for index-identity association.
    pub max_time_diff: Option<f64>,
}

impl Association {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn timestamps(t: &Trajectory, role: &str) -> Result<Vec<f64>> {
    t.iter()
        .enumerate()
        .map(|(i, p)| {
            p.timestamp
                .ok_or_else(|| Error::validation(format!("{role} pose {i} has no timestamp")))
        })
        .collect()
}

/// Greedy nearest-timestamp matching.
///
/// Every pair within `max_time_diff` is a candidate. Candidates are accepted in
/// order of increasing `|Δt|` (ties: earlier gt timestamp, then earlier est
/// timestamp) whenever neither index is already taken.
pub fn associate(gt: &Trajectory, est: &Trajectory, max_time_diff: f64) -> Result<Association> {
    if !(max_time_diff >= 0.0) {
        return Err(Error::validation(format!(
            "max_time_diff must be non-negative, got {max_time_diff}"
        )));
    }
    let gt_t = timestamps(gt, "ground-truth")?;
    let est_t = timestamps(est, "estimated")?;

    // both sides are strictly increasing, so each gt stamp has a contiguous
    // window of est candidates
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut start = 0;
    for (i, &tg) in gt_t.iter().enumerate() {
        while start < est_t.len() && est_t[start] < tg - max_time_diff {
            start += 1;
        }
        for (j, &te) in est_t.iter().enumerate().skip(start) {
            if te > tg + max_time_diff {
                break;
            }
            let dt = (tg - te).abs();
            if dt <= max_time_diff {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut gt_used = vec![false; gt_t.len()];
    let mut est_used = vec![false; est_t.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !gt_used[i] && !est_used[j] {
            gt_used[i] = true;
            est_used[j] = true;
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyAssociation { max_time_diff });
    }
    pairs.sort_unstable();
    Ok(Association {
        pairs,
        max_time_diff: Some(max_time_diff),
    })
}

/// Pairs pose `i` with pose `i` for datasets with per-frame correspondence.
pub fn associate_by_index(gt: &Trajectory, est: &Trajectory) -> Association {
    let n = gt.len().min(est.len());
    Association {
        pairs: (0..n).map(|i| (i, i)).collect(),
        max_time_diff: None,
    }
}
