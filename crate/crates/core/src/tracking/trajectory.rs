//! Newline-delimited JSON hand trajectories.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{HandFrame, TrackingError, FINGERTIPS};
use crate::geometry::Vec3;

/// One line of a trajectory file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub tips: [[f64; 3]; FINGERTIPS],
    pub palm: [f64; 3],
    pub valid: bool,
}

impl From<&HandFrame> for TrajectoryRecord {
    fn from(f: &HandFrame) -> Self {
        Self {
            t: f.timestamp,
            tips: f.fingertips.map(|p| [p.x, p.y, p.z]),
            palm: [f.palm.x, f.palm.y, f.palm.z],
            valid: f.valid,
        }
    }
}

impl From<&TrajectoryRecord> for HandFrame {
    fn from(r: &TrajectoryRecord) -> Self {
        HandFrame {
            timestamp: r.t,
            fingertips: r.tips.map(Vec3::from),
            palm: Vec3::from(r.palm),
            valid: r.valid,
        }
    }
}

/// Reads frames, rejecting malformed lines, non-finite valid positions and
/// timestamps that do not strictly increase. Blank lines are skipped.
pub fn read_trajectory(reader: impl BufRead) -> Result<Vec<HandFrame>, TrackingError> {
    let mut frames: Vec<HandFrame> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| TrackingError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(&line).map_err(|e| TrackingError::Trajectory {
            line: line_no,
            message: e.to_string(),
        })?;
        let frame = HandFrame::from(&rec);
        let bad = |message: &str| TrackingError::Trajectory {
            line: line_no,
            message: message.to_string(),
        };
        if !frame.timestamp.is_finite() {
            return Err(bad("non-finite timestamp"));
        }
        if frame.valid && !frame.is_finite() {
            return Err(bad("non-finite position in valid frame"));
        }
        if let Some(prev) = frames.last() {
            if !(frame.timestamp > prev.timestamp) {
                return Err(bad("timestamps must strictly increase"));
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn write_trajectory(mut writer: impl Write, frames: &[HandFrame]) -> Result<(), TrackingError> {
    for f in frames {
        let line = serde_json::to_string(&TrajectoryRecord::from(f)).map_err(|e| TrackingError::Io(e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| TrackingError::Io(e.to_string()))?;
    }
    Ok(())
}
