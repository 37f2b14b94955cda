//! Newline-delimited JSON front end for the coordinator, so the same logic
//! can serve robots over any byte stream.
//!
//! Inbound lines are `path` announcements and `pose` reports; outbound lines
//! are `cmd` verdicts. Time is driven by pose timestamps: whenever a pose
//! arrives at least one tick period after the previous tick, the coordinator
//! ticks at that pose's time.

use super::{Command, Coordinator, PoseReport, Snapshot, Verdict, ZoneId};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2};
use crate::global_planner::{PlannedPath, RobotId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Inbound {
    Path {
        robot: RobotId,
        waypoints: Vec<[f64; 2]>,
        etas: Vec<f64>,
    },
    Pose {
        robot: RobotId,
        x: f64,
        y: f64,
        heading: f64,
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "cmd")]
pub struct Outbound {
    pub robot: RobotId,
    pub verdict: Verdict,
    pub zone: ZoneId,
    pub t: f64,
}

impl From<Command> for Outbound {
    fn from(c: Command) -> Self {
        Self {
            robot: c.robot_id,
            verdict: c.verdict,
            zone: c.zone_id,
            t: c.issued_at,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServiceStats {
    pub lines: u64,
    pub rejected: u64,
    pub ticks: u64,
    pub commands: u64,
}

pub struct CoordinatorService {
    coordinator: Coordinator,
    tick_period: f64,
    last_tick: Option<f64>,
    poses: BTreeMap<RobotId, PoseReport>,
    paths: BTreeMap<RobotId, PlannedPath>,
}

impl CoordinatorService {
    pub fn new(coordinator: Coordinator, tick_period: f64) -> Self {
        Self {
            coordinator,
            tick_period,
            last_tick: None,
            poses: BTreeMap::new(),
            paths: BTreeMap::new(),
        }
    }

    pub fn coordinator(&self) -> &Coordinator {
        &self.coordinator
    }

    /// Applies one message; returns the commands of a tick it triggered.
    pub fn handle(&mut self, msg: Inbound) -> Result<Vec<Outbound>> {
        match msg {
            Inbound::Path {
                robot,
                waypoints,
                etas,
            } => {
                let announced_at = etas.first().copied().unwrap_or(0.0);
                let path = PlannedPath {
                    robot_id: robot,
                    waypoints: waypoints.iter().map(|&[x, y]| Point2::new(x, y)).collect(),
                    etas,
                    announced_at,
                };
                if !path.is_well_formed() {
                    return Err(Error::Parse(format!(
                        "path for robot {robot}: need matching non-empty waypoints and non-decreasing etas"
                    )));
                }
                self.paths.insert(robot, path);
                Ok(Vec::new())
            }
            Inbound::Pose {
                robot,
                x,
                y,
                heading,
                t,
            } => {
                if ![x, y, heading, t].iter().all(|v| v.is_finite()) {
                    return Err(Error::Parse(format!("pose for robot {robot} is not finite")));
                }
                self.poses.insert(
                    robot,
                    PoseReport {
                        robot_id: robot,
                        pose: Pose2::new(x, y, heading),
                        stamp: t,
                    },
                );
                let due = self.last_tick.is_none_or(|last| t - last >= self.tick_period);
                if due {
                    self.tick(t)
                } else {
                    Ok(Vec::new())
                }
            }
        }
    }

    /// Ticks at `now`. Robots whose last pose is too old are dropped along
    /// with their path, so one silent robot cannot stall the others.
    pub fn tick(&mut self, now: f64) -> Result<Vec<Outbound>> {
        let staleness = self.coordinator.config().staleness;
        let stale: Vec<RobotId> = self
            .poses
            .values()
            .filter(|p| now - p.stamp > staleness)
            .map(|p| p.robot_id)
            .collect();
        for id in stale {
            self.poses.remove(&id);
            self.paths.remove(&id);
        }
        let snapshot = Snapshot {
            poses: self.poses.values().copied().collect(),
            paths: self
                .paths
                .iter()
                .filter(|(id, _)| self.poses.contains_key(id))
                .map(|(&id, p)| (id, p.clone()))
                .collect(),
        };
        self.last_tick = Some(now);
        let cmds = self.coordinator.tick(&snapshot, now)?;
        Ok(cmds.into_iter().map(Outbound::from).collect())
    }

    /// Serves until `input` ends. Malformed lines are skipped and counted.
    pub fn run<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> Result<ServiceStats> {
        let mut stats = ServiceStats::default();
        for line in input.lines() {
            let line = line.map_err(|e| Error::io("service input", e))?;
            if line.trim().is_empty() {
                continue;
            }
            stats.lines += 1;
            let out = match serde_json::from_str::<Inbound>(&line) {
                Ok(msg) => self.handle(msg),
                Err(e) => Err(Error::Parse(e.to_string())),
            };
            let Ok(cmds) = out else {
                stats.rejected += 1;
                continue;
            };
            if !cmds.is_empty() {
                stats.ticks += 1;
            }
            for c in &cmds {
                serde_json::to_writer(&mut output, c)
                    .map_err(|e| Error::io("service output", e.into()))?;
                output
                    .write_all(b"\n")
                    .map_err(|e| Error::io("service output", e))?;
                stats.commands += 1;
            }
            output.flush().map_err(|e| Error::io("service output", e))?;
        }
        Ok(stats)
    }
}
