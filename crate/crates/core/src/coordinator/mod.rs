//! The centralized virtual traffic light.
//!
//! Robots announce their planned paths and report poses. Every tick the
//! coordinator detects pairwise path conflicts, clusters them into zones and
//! issues a STOP or PROCEED verdict to each robot inside a zone's stop area.
//! It never edits paths; robots outside every stop area get no command.

mod cluster;
mod detect;
mod resolve;
pub mod service;

pub use cluster::{cluster_conflicts, ConflictCluster, UnionFind};
pub use detect::{
    detect_conflicts, pair_conflicts, paths_conflict, remaining_path, Conflict, ConflictParams,
    IndexRange,
};
pub use resolve::{
    in_zone_subpath, priority_queue, resolve_fcfs, resolve_zone, update_fcfs, Command,
    ConflictZone, Verdict, ZoneId, ZoneMode,
};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point2, Pose2};
use crate::global_planner::{PlannedPath, RobotId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorConfig {
    pub conflict: ConflictParams,
    /// Stop area = conflict box inflated by this much on every side.
    pub stop_margin: f64,
    /// Maximum age of a pose relative to the tick time.
    pub staleness: f64,
    /// A robot not held by a STOP that moves less than `stall_distance` for
    /// `stall_time` seconds drops behind every robot that stalled earlier or
    /// never in all priority queues, until it moves again. Breaks standoffs
    /// where the queue head is physically blocked by a robot it outranks.
    pub stall_time: f64,
    pub stall_distance: f64,
}

impl Default for CoordinatorConfig {
    fn default() -> Self {
        Self {
            conflict: ConflictParams::default(),
            stop_margin: 6.0,
            staleness: 1.0,
            stall_time: 10.0,
            stall_distance: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseReport {
    pub robot_id: RobotId,
    pub pose: Pose2,
    pub stamp: f64,
}

/// Everything the coordinator sees in one tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub poses: Vec<PoseReport>,
    /// Latest announced path per robot.
    pub paths: BTreeMap<RobotId, PlannedPath>,
}

#[derive(Debug, Clone, Default)]
pub struct Coordinator {
    config: CoordinatorConfig,
    zones: Vec<ConflictZone>,
    static_zones: Vec<ConflictZone>,
    next_zone_id: ZoneId,
    last_conflicts: usize,
    /// Per robot: where it was last seen moving and since when it has not.
    anchors: BTreeMap<RobotId, (Point2, f64)>,
    stopped: BTreeSet<RobotId>,
    demoted: BTreeMap<RobotId, f64>,
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    /// Registers a pre-defined intersection served first-come-first-served.
    pub fn add_static_zone(&mut self, bbox: Aabb) -> ZoneId {
        let id = self.fresh_id();
        self.static_zones
            .push(ConflictZone::static_fcfs(id, bbox, self.config.stop_margin));
        id
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.config
    }

    /// Detected zones as of the last tick.
    pub fn zones(&self) -> &[ConflictZone] {
        &self.zones
    }

    pub fn static_zones(&self) -> &[ConflictZone] {
        &self.static_zones
    }

    /// Robots currently yielding their queue position, with the time they
    /// last stalled.
    pub fn demoted(&self) -> &BTreeMap<RobotId, f64> {
        &self.demoted
    }

    fn update_stalls(&mut self, positions: &BTreeMap<RobotId, Point2>, now: f64) {
        self.anchors.retain(|id, _| positions.contains_key(id));
        self.demoted.retain(|id, _| positions.contains_key(id));
        for (&id, &p) in positions {
            let anchor = self.anchors.entry(id).or_insert((p, now));
            if p.distance(anchor.0) >= self.config.stall_distance {
                *anchor = (p, now);
                self.demoted.remove(&id);
            } else if self.stopped.contains(&id) {
                // waiting at a STOP is not stalling
                anchor.1 = now;
            } else if now - anchor.1 >= self.config.stall_time {
                // still stuck after yielding once: yield again
                anchor.1 = now;
                self.demoted.insert(id, now);
            }
        }
    }

    /// Number of pairwise conflicts found in the last tick.
    pub fn last_conflict_count(&self) -> usize {
        self.last_conflicts
    }

    fn fresh_id(&mut self) -> ZoneId {
        let id = self.next_zone_id;
        self.next_zone_id += 1;
        id
    }

    /// Runs detection, clustering and resolution; returns at most one
    /// command per robot, sorted by robot id, with STOP dominating.
    pub fn tick(&mut self, snapshot: &Snapshot, now: f64) -> Result<Vec<Command>> {
        for p in &snapshot.poses {
            let age = now - p.stamp;
            if age > self.config.staleness {
                return Err(Error::StaleSnapshot {
                    robot: p.robot_id,
                    age,
                });
            }
        }
        let positions: BTreeMap<RobotId, Point2> = snapshot
            .poses
            .iter()
            .map(|p| (p.robot_id, p.pose.position()))
            .collect();

        let remaining: BTreeMap<RobotId, PlannedPath> = snapshot
            .paths
            .iter()
            .filter_map(|(&id, path)| {
                positions
                    .get(&id)
                    .filter(|_| !path.waypoints.is_empty())
                    .map(|&p| (id, remaining_path(path, p, now)))
            })
            .collect();

        self.update_zones(&remaining, &positions);
        self.update_stalls(&positions, now);

        let mut merged: BTreeMap<RobotId, Command> = BTreeMap::new();
        let mut merge = |cmd: Command| {
            merged
                .entry(cmd.robot_id)
                .and_modify(|c| {
                    if c.verdict == Verdict::Proceed && cmd.verdict == Verdict::Stop {
                        *c = cmd;
                    }
                })
                .or_insert(cmd);
        };
        for zone in &self.zones {
            for cmd in resolve_zone(
                zone,
                &positions,
                &remaining,
                &self.demoted,
                &self.config.conflict,
                now,
            ) {
                merge(cmd);
            }
        }
        for zone in &mut self.static_zones {
            update_fcfs(zone, &positions, now);
            for cmd in resolve_fcfs(zone, &zone.fcfs_queue, now) {
                merge(cmd);
            }
        }
        self.stopped = merged
            .values()
            .filter(|c| c.verdict == Verdict::Stop)
            .map(|c| c.robot_id)
            .collect();
        Ok(merged.into_values().collect())
    }

    fn update_zones(
        &mut self,
        remaining: &BTreeMap<RobotId, PlannedPath>,
        positions: &BTreeMap<RobotId, Point2>,
    ) {
        let paths: Vec<PlannedPath> = remaining.values().cloned().collect();
        let conflicts = detect_conflicts(&paths, &self.config.conflict);
        self.last_conflicts = conflicts.len();

        // zones from the previous tick survive for members whose remaining
        // path still runs through the box
        let persisting: Vec<(ZoneId, Aabb, BTreeSet<RobotId>)> = self
            .zones
            .iter()
            .filter_map(|z| {
                let members: BTreeSet<RobotId> = z
                    .members
                    .iter()
                    .copied()
                    .filter(|id| {
                        remaining
                            .get(id)
                            .is_some_and(|p| path_enters(&p.waypoints, &z.bbox))
                    })
                    .collect();
                (!members.is_empty()).then_some((z.id, z.bbox, members))
            })
            .collect();

        let ids: Vec<RobotId> = remaining.keys().copied().collect();
        let index: BTreeMap<RobotId, usize> = ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut uf = UnionFind::new(ids.len());
        for c in &conflicts {
            uf.union(index[&c.robot_a], index[&c.robot_b]);
        }
        for (_, _, members) in &persisting {
            let mut it = members.iter();
            let first = index[it.next().unwrap()];
            for m in it {
                uf.union(first, index[m]);
            }
        }

        struct Group {
            members: BTreeSet<RobotId>,
            detected: Option<Aabb>,
            carried: Option<Aabb>,
            old: Vec<(ZoneId, BTreeSet<RobotId>)>,
        }
        let empty = || Group {
            members: BTreeSet::new(),
            detected: None,
            carried: None,
            old: Vec::new(),
        };
        let mut groups: BTreeMap<usize, Group> = BTreeMap::new();
        for c in &conflicts {
            let g = groups.entry(uf.find(index[&c.robot_a])).or_insert_with(empty);
            g.members.insert(c.robot_a);
            g.members.insert(c.robot_b);
            g.detected = Some(g.detected.map_or(c.region, |b| b.union(c.region)));
        }
        for (id, bbox, members) in &persisting {
            let first = *members.iter().next().unwrap();
            let g = groups.entry(uf.find(index[&first])).or_insert_with(empty);
            g.members.extend(members.iter().copied());
            g.carried = Some(g.carried.map_or(*bbox, |b| b.union(*bbox)));
            g.old.push((*id, members.clone()));
        }

        let mut zones = Vec::with_capacity(groups.len());
        for g in groups.into_values() {
            let bbox = g.detected.or(g.carried).expect("group has a source");
            let id = g
                .old
                .iter()
                .find(|(_, m)| *m == g.members)
                .or_else(|| g.old.iter().min_by_key(|(id, _)| *id))
                .map(|(id, _)| *id)
                .unwrap_or_else(|| self.fresh_id());
            let mut zone = ConflictZone::dynamic(id, bbox, self.config.stop_margin, g.members);
            zone.occupants = zone
                .members
                .iter()
                .copied()
                .filter(|id| positions.get(id).is_some_and(|p| zone.bbox.contains(*p)))
                .collect();
            zones.push(zone);
        }
        zones.sort_by_key(|z| z.id);
        self.zones = zones;
    }
}

fn path_enters(waypoints: &[Point2], bbox: &Aabb) -> bool {
    match waypoints {
        [] => false,
        [p] => bbox.contains(*p),
        _ => waypoints
            .windows(2)
            .any(|w| bbox.intersects_segment(w[0], w[1])),
    }
}
