//! Per-zone verdicts: proximity priority for detected zones and
//! first-come-first-served for pre-defined intersections.

use super::detect::{paths_conflict, ConflictParams};
use crate::geometry::{Aabb, Point2};
use crate::global_planner::{PlannedPath, RobotId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type ZoneId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Stop,
    Proceed,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stop => "STOP",
            Verdict::Proceed => "PROCEED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub robot_id: RobotId,
    pub verdict: Verdict,
    pub zone_id: ZoneId,
    pub issued_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneMode {
    Dynamic,
    StaticFcfs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictZone {
    pub id: ZoneId,
    pub bbox: Aabb,
    pub stop_area: Aabb,
    pub members: BTreeSet<RobotId>,
    pub occupants: BTreeSet<RobotId>,
    pub mode: ZoneMode,
    /// `(robot, arrival time)` in service order; static zones only.
    pub fcfs_queue: Vec<(RobotId, f64)>,
    /// Robots that crossed and are still inside the stop area (static zones).
    #[serde(default)]
    pub departed: BTreeSet<RobotId>,
}

impl ConflictZone {
    pub fn dynamic(id: ZoneId, bbox: Aabb, stop_margin: f64, members: BTreeSet<RobotId>) -> Self {
        Self {
            id,
            bbox,
            stop_area: bbox.inflate(stop_margin),
            members,
            occupants: BTreeSet::new(),
            mode: ZoneMode::Dynamic,
            fcfs_queue: Vec::new(),
            departed: BTreeSet::new(),
        }
    }

    pub fn static_fcfs(id: ZoneId, bbox: Aabb, stop_margin: f64) -> Self {
        Self {
            mode: ZoneMode::StaticFcfs,
            ..Self::dynamic(id, bbox, stop_margin, BTreeSet::new())
        }
    }

    pub fn is_occupied(&self) -> bool {
        !self.occupants.is_empty()
    }
}

/// The part of `path` a robot drives through `zone`: from its start until it
/// leaves the box after entering it, or leaves the stop area, plus the first
/// waypoint past that point.
pub fn in_zone_subpath(path: &PlannedPath, zone: &ConflictZone) -> PlannedPath {
    let n = path.waypoints.len();
    let mut entered = false;
    let mut end = 0;
    while end < n {
        let p = path.waypoints[end];
        let in_box = zone.bbox.contains(p);
        if !zone.stop_area.contains(p) || (entered && !in_box) {
            break;
        }
        entered |= in_box;
        end += 1;
    }
    let end = (end + 1).min(n).max(1);
    PlannedPath {
        robot_id: path.robot_id,
        waypoints: path.waypoints[..end].to_vec(),
        etas: path.etas[..end].to_vec(),
        announced_at: path.announced_at,
    }
}

/// Robots of `zone` inside its stop area, nearest to the box center first
/// (ties by lower id). Robots in `demoted` (robot → time it stalled) queue
/// behind all others, the most recent staller last.
pub fn priority_queue(
    zone: &ConflictZone,
    positions: &BTreeMap<RobotId, Point2>,
    demoted: &BTreeMap<RobotId, f64>,
) -> Vec<RobotId> {
    let center = zone.bbox.center();
    let mut queue: Vec<(f64, f64, RobotId)> = zone
        .members
        .iter()
        .filter_map(|id| positions.get(id).map(|p| (id, p)))
        .filter(|(_, p)| zone.stop_area.contains(**p))
        .map(|(&id, p)| {
            let stalled = demoted.get(&id).copied().unwrap_or(f64::NEG_INFINITY);
            (stalled, p.distance(center), id)
        })
        .collect();
    queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    queue.into_iter().map(|(_, _, id)| id).collect()
}

/// Walks the priority queue and clears each robot whose in-zone path is
/// conflict free against everyone already cleared this tick.
///
/// `paths` are the robots' remaining paths (starting at their position).
pub fn resolve_zone(
    zone: &ConflictZone,
    positions: &BTreeMap<RobotId, Point2>,
    paths: &BTreeMap<RobotId, PlannedPath>,
    demoted: &BTreeMap<RobotId, f64>,
    params: &ConflictParams,
    now: f64,
) -> Vec<Command> {
    debug_assert_eq!(zone.mode, ZoneMode::Dynamic);
    let mut cleared: Vec<PlannedPath> = Vec::new();
    let mut out = Vec::new();
    for (rank, id) in priority_queue(zone, positions, demoted).into_iter().enumerate() {
        let Some(path) = paths.get(&id) else {
            continue;
        };
        let sub = in_zone_subpath(path, zone);
        let verdict = if rank == 0 || cleared.iter().all(|c| !paths_conflict(&sub, c, params)) {
            cleared.push(sub);
            Verdict::Proceed
        } else {
            Verdict::Stop
        };
        out.push(Command {
            robot_id: id,
            verdict,
            zone_id: zone.id,
            issued_at: now,
        });
    }
    out
}

/// First-come-first-served: the earliest arrival may enter once the box is
/// empty (or holds only itself); everyone else waits.
pub fn resolve_fcfs(zone: &ConflictZone, arrivals: &[(RobotId, f64)], now: f64) -> Vec<Command> {
    let mut queue = arrivals.to_vec();
    queue.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(queue.len());
    for (k, &(id, _)) in queue.iter().enumerate() {
        let verdict = if k == 0 && zone.occupants.iter().all(|&o| o == id) {
            Verdict::Proceed
        } else {
            Verdict::Stop
        };
        out.push(Command {
            robot_id: id,
            verdict,
            zone_id: zone.id,
            issued_at: now,
        });
    }
    out
}

/// Advances a static zone's queue from current positions.
///
/// Robots are enqueued on entering the stop area and dequeued once they leave
/// the box after having been inside it, or leave the stop area without ever
/// entering the box.
pub fn update_fcfs(zone: &mut ConflictZone, positions: &BTreeMap<RobotId, Point2>, now: f64) {
    let mut was_inside: BTreeSet<RobotId> = std::mem::take(&mut zone.occupants);
    let mut departed = std::mem::take(&mut zone.departed);
    departed.retain(|id| positions.get(id).is_some_and(|p| zone.stop_area.contains(*p)));
    zone.fcfs_queue.retain(|(id, _)| {
        let Some(&p) = positions.get(id) else {
            was_inside.remove(id);
            return false;
        };
        let inside = zone.bbox.contains(p);
        if was_inside.contains(id) && !inside {
            was_inside.remove(id);
            departed.insert(*id);
            return false;
        }
        inside || zone.stop_area.contains(p)
    });
    for (&id, &p) in positions {
        if zone.stop_area.contains(p)
            && !departed.contains(&id)
            && !zone.fcfs_queue.iter().any(|(q, _)| *q == id)
        {
            zone.fcfs_queue.push((id, now));
        }
    }
    zone.fcfs_queue
        .sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    zone.occupants = zone
        .fcfs_queue
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| zone.bbox.contains(positions[id]))
        .collect();
    zone.members = zone.fcfs_queue.iter().map(|(id, _)| *id).collect();
    zone.departed = departed;
}
