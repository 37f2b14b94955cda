//! Pairwise conflict detection between announced paths.

use crate::geometry::{segment_segment_closest, Aabb, Point2};
use crate::global_planner::{PlannedPath, RobotId};
use crate::local_planner::project_on_path;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictParams {
    /// Maximum ETA difference at the closest approach, seconds.
    pub eta_threshold: f64,
    /// Segments closer than this (one robot diameter) intersect.
    pub clearance: f64,
}

impl Default for ConflictParams {
    fn default() -> Self {
        Self {
            eta_threshold: 5.0,
            clearance: 3.0,
        }
    }
}

/// Inclusive waypoint index range `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub robot_a: RobotId,
    pub robot_b: RobotId,
    pub segment_a: IndexRange,
    pub segment_b: IndexRange,
    pub region: Aabb,
}

/// One close segment pair.
#[derive(Debug, Clone, Copy)]
struct Hit {
    i: usize,
    j: usize,
}

fn segment(path: &PlannedPath, i: usize) -> (Point2, Point2, f64, f64) {
    let n = path.waypoints.len();
    let k = (i + 1).min(n - 1);
    (
        path.waypoints[i],
        path.waypoints[k],
        path.etas[i],
        path.etas[k],
    )
}

fn segment_count(path: &PlannedPath) -> usize {
    path.waypoints.len().saturating_sub(1).max(1)
}

/// Segment pairs that pass both the geometric and the ETA test.
fn close_pairs(a: &PlannedPath, b: &PlannedPath, params: &ConflictParams, first_only: bool) -> Vec<Hit> {
    let mut hits = Vec::new();
    let (Some(box_a), Some(box_b)) = (
        Aabb::around(a.waypoints.iter().copied()),
        Aabb::around(b.waypoints.iter().copied()),
    ) else {
        return hits;
    };
    if !box_a.inflate(params.clearance).intersects(&box_b) {
        return hits;
    }
    let thr = params.eta_threshold;
    let nb = segment_count(b);
    for i in 0..segment_count(a) {
        let (p0, p1, ea0, ea1) = segment(a, i);
        let seg_box = Aabb::new(p0, p1).inflate(params.clearance);
        if !seg_box.intersects(&box_b) {
            continue;
        }
        // b's ETAs are sorted, so the overlapping time window is contiguous
        let lo_t = ea0.min(ea1) - thr;
        let hi_t = ea0.max(ea1) + thr;
        let j_start = b.etas[..nb].partition_point(|&e| e < lo_t).saturating_sub(1);
        for j in j_start..nb {
            let (q0, q1, eb0, eb1) = segment(b, j);
            if eb0.min(eb1) > hi_t {
                break;
            }
            if eb0.max(eb1) < lo_t {
                continue;
            }
            if !seg_box.intersects(&Aabb::new(q0, q1)) {
                continue;
            }
            let (d, s, t) = segment_segment_closest(p0, p1, q0, q1);
            if d >= params.clearance {
                continue;
            }
            let eta_a = ea0 + (ea1 - ea0) * s;
            let eta_b = eb0 + (eb1 - eb0) * t;
            if (eta_a - eta_b).abs() <= thr {
                hits.push(Hit { i, j });
                if first_only {
                    return hits;
                }
            }
        }
    }
    hits
}

/// Whether two paths conflict anywhere (same test as [`detect_conflicts`]).
pub fn paths_conflict(a: &PlannedPath, b: &PlannedPath, params: &ConflictParams) -> bool {
    !close_pairs(a, b, params, true).is_empty()
}

fn waypoint_range(path: &PlannedPath, first_seg: usize, last_seg: usize) -> IndexRange {
    let last = (last_seg + 1).min(path.waypoints.len() - 1);
    IndexRange {
        first: first_seg,
        last,
    }
}

/// Conflicts between one pair of paths; adjacent close segment pairs are
/// merged into a single conflict.
pub fn pair_conflicts(a: &PlannedPath, b: &PlannedPath, params: &ConflictParams) -> Vec<Conflict> {
    if a.robot_id == b.robot_id {
        return Vec::new();
    }
    let (a, b) = if a.robot_id < b.robot_id { (a, b) } else { (b, a) };
    let hits = close_pairs(a, b, params, false);
    if hits.is_empty() {
        return Vec::new();
    }

    // hits arrive sorted by i then j; group 8-neighbours in (i, j) space
    let mut group: Vec<usize> = (0..hits.len()).collect();
    fn root(group: &mut [usize], mut x: usize) -> usize {
        while group[x] != x {
            group[x] = group[group[x]];
            x = group[x];
        }
        x
    }
    for x in 0..hits.len() {
        for y in (0..x).rev() {
            if hits[x].i > hits[y].i + 1 {
                break;
            }
            if hits[x].j.abs_diff(hits[y].j) <= 1 {
                let (rx, ry) = (root(&mut group, x), root(&mut group, y));
                if rx != ry {
                    group[rx.max(ry)] = rx.min(ry);
                }
            }
        }
    }

    let mut out: Vec<(usize, Conflict)> = Vec::new();
    for x in 0..hits.len() {
        let r = root(&mut group, x);
        let h = hits[x];
        match out.iter_mut().find(|(k, _)| *k == r) {
            Some((_, c)) => {
                c.segment_a.first = c.segment_a.first.min(h.i);
                c.segment_a.last = c.segment_a.last.max(waypoint_range(a, h.i, h.i).last);
                c.segment_b.first = c.segment_b.first.min(h.j);
                c.segment_b.last = c.segment_b.last.max(waypoint_range(b, h.j, h.j).last);
            }
            None => out.push((
                r,
                Conflict {
                    robot_a: a.robot_id,
                    robot_b: b.robot_id,
                    segment_a: waypoint_range(a, h.i, h.i),
                    segment_b: waypoint_range(b, h.j, h.j),
                    region: Aabb::from_point(a.waypoints[h.i]),
                },
            )),
        }
    }
    out.into_iter()
        .map(|(_, mut c)| {
            let pts_a = &a.waypoints[c.segment_a.first..=c.segment_a.last];
            let pts_b = &b.waypoints[c.segment_b.first..=c.segment_b.last];
            c.region = Aabb::around(pts_a.iter().chain(pts_b).copied()).unwrap();
            c
        })
        .collect()
}

/// Every conflict among `paths`, pairs visited in input order.
pub fn detect_conflicts(paths: &[PlannedPath], params: &ConflictParams) -> Vec<Conflict> {
    let mut out = Vec::new();
    for (k, a) in paths.iter().enumerate() {
        for b in &paths[k + 1..] {
            out.extend(pair_conflicts(a, b, params));
        }
    }
    out
}

/// Suffix of `path` from the robot's current position, with ETAs shifted so
/// the robot is due at its projection `now`.
pub fn remaining_path(path: &PlannedPath, position: Point2, now: f64) -> PlannedPath {
    let prog = project_on_path(&path.waypoints, position);
    let n = path.waypoints.len();
    let k = (prog.segment + 1).min(n - 1);
    let e0 = path.etas[prog.segment];
    let eta_here = e0 + (path.etas[k] - e0) * prog.along;

    let mut waypoints = Vec::with_capacity(n - prog.segment + 1);
    let mut etas = Vec::with_capacity(n - prog.segment + 1);
    waypoints.push(position);
    etas.push(now);
    if n > 1 {
        for idx in k..n {
            waypoints.push(path.waypoints[idx]);
            etas.push((now + path.etas[idx] - eta_here).max(now));
        }
    }
    PlannedPath {
        robot_id: path.robot_id,
        waypoints,
        etas,
        announced_at: path.announced_at,
    }
}
