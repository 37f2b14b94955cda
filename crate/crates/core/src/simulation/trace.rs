//! Newline-delimited JSON step trace.

use super::RobotStatus;
use crate::coordinator::Verdict;
use crate::error::{Error, Result};
use crate::global_planner::RobotId;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRobot {
    pub id: RobotId,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub status: RobotStatus,
    pub replans: u32,
    /// Waypoints of the robot's path, present only when it changed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceZone {
    pub id: u64,
    pub bbox: [f64; 4],
    pub occupied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCommand {
    pub robot: RobotId,
    pub verdict: Verdict,
    pub zone: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub robots: Vec<TraceRobot>,
    pub zones: Vec<TraceZone>,
    pub cmds: Vec<TraceCommand>,
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    write_trace(records, std::io::BufWriter::new(file))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("trace", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("trace line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_trace(std::io::BufReader::new(file))
}

/// Per-robot metrics recomputed from a trace alone.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics {
    pub id: RobotId,
    pub success: bool,
    pub distance: f64,
    pub active_steps: u32,
    pub replans: u32,
}

impl TraceMetrics {
    pub fn avg_speed(&self) -> f64 {
        super::speed_metric(self.distance, self.active_steps)
    }
}

/// Rebuilds success, distance, active steps and replans per robot by walking
/// consecutive records. The first record must be the initial state.
pub fn metrics_from_trace(records: &[TraceRecord]) -> Vec<TraceMetrics> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let mut out: Vec<TraceMetrics> = first
        .robots
        .iter()
        .map(|r| TraceMetrics {
            id: r.id,
            success: r.status == RobotStatus::Reached,
            distance: 0.0,
            active_steps: 0,
            replans: r.replans,
        })
        .collect();
    for pair in records.windows(2) {
        for (k, (prev, cur)) in pair[0].robots.iter().zip(&pair[1].robots).enumerate() {
            if !prev.status.is_terminal() {
                out[k].distance += (cur.x - prev.x).hypot(cur.y - prev.y);
                out[k].active_steps += 1;
            }
            out[k].success = cur.status == RobotStatus::Reached;
            out[k].replans = cur.replans;
        }
    }
    out
}
