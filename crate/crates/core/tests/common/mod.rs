//! Independent oracles shared by the oracle tests and the acceptance suite.
//! Each suite returns a short summary on success or the first
//! counterexample on failure.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::time::{Duration, Instant};
use vtl_core::coordinator::{
    cluster_conflicts, in_zone_subpath, remaining_path, Conflict, ConflictParams, Coordinator,
    CoordinatorConfig, IndexRange, PoseReport, Snapshot, Verdict,
};
use vtl_core::global_planner::{
    annotate_etas, astar, plan_path, sample_mission, Cell, OccupancyGrid, PlannedPath, PlannerConfig, RobotId,
};
use vtl_core::local_planner::{rollout, VelocityCommand};
use vtl_core::simulation::{sample_missions, TrialConfig};
use vtl_core::world::{build_world, WorldConfig, WorldMap};
use vtl_core::geometry::normalize_angle;
use vtl_core::{Aabb, Point2, Pose2};

pub struct Outcome {
    pub cases: usize,
    pub detail: String,
    pub elapsed: Duration,
}

pub type Suite = Result<Outcome, String>;

pub fn default_map() -> WorldMap {
    build_world(&WorldConfig::default()).unwrap()
}

// ---------------------------------------------------------------- Dijkstra

/// Plain Dijkstra over the grid with the same move rules as A*: 8-connected,
/// corner cutting forbidden, start always enterable, goal must be free.
/// Costs are summed move by move in units of the cell size.
pub fn dijkstra_cost(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    if start == goal {
        return Some(0.0);
    }
    if grid.is_blocked(goal) {
        return None;
    }
    let (cols, rows) = (grid.cols() as i64, grid.rows() as i64);
    let free = |c: i64, r: i64| c >= 0 && r >= 0 && c < cols && r < rows && !grid.is_blocked((c as usize, r as usize));
    let mut best: BTreeMap<Cell, u64> = BTreeMap::new();
    // integer costs in 1/1e9 cell units avoid float keys in the heap
    const STRAIGHT: u64 = 1_000_000_000;
    let diag = (std::f64::consts::SQRT_2 * STRAIGHT as f64).round() as u64;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, 0u64, start)));
    best.insert(start, 0);
    // track (straight, diagonal) counts alongside the integer cost so the
    // final cost can be reported without accumulated rounding
    let mut moves: BTreeMap<Cell, (u64, u64)> = BTreeMap::new();
    moves.insert(start, (0, 0));
    while let Some(Reverse((cost, _, cell))) = heap.pop() {
        if best.get(&cell).is_some_and(|&b| b < cost) {
            continue;
        }
        if cell == goal {
            let (s, d) = moves[&cell];
            return Some((s as f64 + d as f64 * std::f64::consts::SQRT_2) * grid.resolution());
        }
        let (c, r) = (cell.0 as i64, cell.1 as i64);
        for dc in -1i64..=1 {
            for dr in -1i64..=1 {
                if dc == 0 && dr == 0 || !free(c + dc, r + dr) {
                    continue;
                }
                let diagonal = dc != 0 && dr != 0;
                if diagonal && (!free(c + dc, r) || !free(c, r + dr)) {
                    continue;
                }
                let next = ((c + dc) as usize, (r + dr) as usize);
                let nc = cost + if diagonal { diag } else { STRAIGHT };
                if best.get(&next).map_or(true, |&b| nc < b) {
                    best.insert(next, nc);
                    let (s, d) = moves[&cell];
                    moves.insert(next, if diagonal { (s, d + 1) } else { (s + 1, d) });
                    heap.push(Reverse((nc, d_key(next), next)));
                }
            }
        }
    }
    None
}

fn d_key(c: Cell) -> u64 {
    ((c.1 as u64) << 32) | c.0 as u64
}

/// A* cost equals Dijkstra cost (or both fail) on `missions` random
/// start/goal pairs, with 0–4 random disc obstacles added to the pillars.
pub fn astar_vs_dijkstra(missions: usize, seed: u64) -> Suite {
    let started = Instant::now();
    let map = default_map();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unreachable = 0;
    for case in 0..missions {
        let radius = rng.gen_range(1.5..2.5);
        let m = sample_mission(&map, radius, &mut rng).map_err(|e| e.to_string())?;
        let (start, goal) = (m.start, m.goal);
        let mut extras: Vec<(Point2, f64)> = Vec::new();
        while extras.len() < rng.gen_range(0..=4) {
            let disc = (
                Point2::new(rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0)),
                rng.gen_range(1.0..4.0),
            );
            if map.is_free_with(start, radius, &[disc]) && map.is_free_with(goal, radius, &[disc]) {
                extras.push(disc);
            }
        }
        let grid = OccupancyGrid::build(&map, radius, &extras);
        let (sc, gc) = (grid.cell_of(start), grid.cell_of(goal));
        let fast = astar(&grid, sc, gc);
        let slow = dijkstra_cost(&grid, sc, gc);
        match (&fast, slow) {
            (None, None) => unreachable += 1,
            (Some(p), Some(d)) => {
                if (p.cost - d).abs() > 1e-9 {
                    return Err(format!("case {case}: A* cost {} vs Dijkstra {d}", p.cost));
                }
                // the returned cell chain must itself be a legal path of that cost
                let mut walked = 0.0;
                for w in p.cells.windows(2) {
                    let (dc, dr) = (w[0].0.abs_diff(w[1].0), w[0].1.abs_diff(w[1].1));
                    if dc > 1 || dr > 1 || (dc, dr) == (0, 0) || grid.is_blocked(w[1]) {
                        return Err(format!("case {case}: illegal move {:?} -> {:?}", w[0], w[1]));
                    }
                    walked += if dc + dr == 2 { std::f64::consts::SQRT_2 } else { 1.0 } * grid.resolution();
                }
                if (walked - d).abs() > 1e-9 || p.cells[0] != sc || *p.cells.last().unwrap() != gc {
                    return Err(format!("case {case}: path walk cost {walked} vs {d}"));
                }
            }
            _ => {
                return Err(format!(
                    "case {case}: A* {:?} vs Dijkstra {slow:?}",
                    fast.map(|p| p.cost)
                ))
            }
        }
    }
    Ok(Outcome {
        cases: missions,
        detail: format!("{} solvable, {unreachable} unreachable", missions - unreachable),
        elapsed: started.elapsed(),
    })
}

// -------------------------------------------------------------- clustering

/// Connected components by boolean transitive closure (Warshall).
pub fn closure_components(nodes: usize, edges: &[(usize, usize)]) -> BTreeSet<Vec<usize>> {
    let mut reach = vec![vec![false; nodes]; nodes];
    for &(a, b) in edges {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..nodes {
        for i in 0..nodes {
            for j in 0..nodes {
                reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..nodes {
        if !reach[i].iter().any(|&r| r) {
            continue; // isolated robots have no conflicts and form no cluster
        }
        let comp: Vec<usize> = (0..nodes).filter(|&j| j == i || reach[i][j]).collect();
        out.insert(comp);
    }
    out
}

fn random_box(rng: &mut ChaCha8Rng) -> Aabb {
    let (x, y) = (rng.gen_range(0.0..45.0), rng.gen_range(0.0..45.0));
    Aabb::new(
        Point2::new(x, y),
        Point2::new(x + rng.gen_range(0.0..5.0), y + rng.gen_range(0.0..5.0)),
    )
}

pub fn clustering_vs_closure(graphs: usize, seed: u64) -> Suite {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut largest = 0;
    for case in 0..graphs {
        let nodes = rng.gen_range(1..=10);
        let density = rng.gen_range(0.0..0.5);
        let mut edges = Vec::new();
        let mut conflicts = Vec::new();
        for a in 0..nodes {
            for b in a + 1..nodes {
                if rng.gen_bool(density) {
                    // some pairs conflict more than once
                    for _ in 0..rng.gen_range(1..=2) {
                        edges.push((a, b));
                        conflicts.push(Conflict {
                            robot_a: a as RobotId,
                            robot_b: b as RobotId,
                            segment_a: IndexRange { first: 0, last: 1 },
                            segment_b: IndexRange { first: 0, last: 1 },
                            region: random_box(&mut rng),
                        });
                    }
                }
            }
        }
        let expected = closure_components(nodes, &edges);
        let clusters = cluster_conflicts(&conflicts);
        let got: BTreeSet<Vec<usize>> = clusters
            .iter()
            .map(|c| c.members.iter().map(|&m| m as usize).collect())
            .collect();
        if got != expected || got.len() != clusters.len() {
            return Err(format!("case {case}: clusters {got:?} vs closure {expected:?}"));
        }
        for c in &clusters {
            largest = largest.max(c.members.len());
            let mut bbox: Option<Aabb> = None;
            for (k, conflict) in conflicts.iter().enumerate() {
                let inside = c.members.contains(&conflict.robot_a);
                if inside != c.conflicts.contains(&k) {
                    return Err(format!("case {case}: conflict {k} misassigned"));
                }
                if inside {
                    bbox = Some(bbox.map_or(conflict.region, |b| b.union(conflict.region)));
                }
            }
            if bbox != Some(c.bbox) {
                return Err(format!("case {case}: cluster box {:?} vs {bbox:?}", c.bbox));
            }
        }
    }
    Ok(Outcome {
        cases: graphs,
        detail: format!("largest component {largest}"),
        elapsed: started.elapsed(),
    })
}

// ------------------------------------------------------ PROCEED re-check

/// Candidate closest-approach parameter pairs `(s, t)` of two segments: the
/// crossing point if they properly cross, else every endpoint-to-segment
/// projection that attains the minimum distance.
fn closest_candidates(p0: Point2, p1: Point2, q0: Point2, q1: Point2) -> (f64, Vec<(f64, f64)>) {
    let cross = |a: Point2, b: Point2| a.x * b.y - a.y * b.x;
    let (d1, d2) = (p1 - p0, q1 - q0);
    let denom = cross(d1, d2);
    if denom.abs() > 1e-12 {
        let s = cross(q0 - p0, d2) / denom;
        let t = cross(q0 - p0, d1) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            return (0.0, vec![(s, t)]);
        }
    }
    let proj = |p: Point2, a: Point2, b: Point2| -> f64 {
        let d = b - a;
        let l = d.x * d.x + d.y * d.y;
        if l == 0.0 {
            0.0
        } else {
            (((p - a).x * d.x + (p - a).y * d.y) / l).clamp(0.0, 1.0)
        }
    };
    let at = |a: Point2, b: Point2, s: f64| Point2::new(a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s);
    let dist = |a: Point2, b: Point2| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let mut cands = Vec::new();
    for s in [0.0, 1.0] {
        let t = proj(at(p0, p1, s), q0, q1);
        cands.push((dist(at(p0, p1, s), at(q0, q1, t)), s, t));
    }
    for t in [0.0, 1.0] {
        let s = proj(at(q0, q1, t), p0, p1);
        cands.push((dist(at(p0, p1, s), at(q0, q1, t)), s, t));
    }
    let min = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let near = cands
        .into_iter()
        .filter(|c| c.0 <= min + 1e-9)
        .map(|(_, s, t)| (s, t))
        .collect();
    (min, near)
}

/// Whether two paths unambiguously conflict: some segment pair is closer
/// than the clearance and the ETAs agree within the threshold at every
/// candidate closest-approach point of that pair.
pub fn brute_force_conflict(a: &PlannedPath, b: &PlannedPath, params: &ConflictParams) -> bool {
    let seg = |p: &PlannedPath, i: usize| {
        let k = (i + 1).min(p.waypoints.len() - 1);
        (p.waypoints[i], p.waypoints[k], p.etas[i], p.etas[k])
    };
    let count = |p: &PlannedPath| p.waypoints.len().saturating_sub(1).max(1);
    for i in 0..count(a) {
        let (p0, p1, ea0, ea1) = seg(a, i);
        for j in 0..count(b) {
            let (q0, q1, eb0, eb1) = seg(b, j);
            let (d, cands) = closest_candidates(p0, p1, q0, q1);
            if d >= params.clearance - 1e-9 {
                continue;
            }
            let all_close = cands.iter().all(|&(s, t)| {
                let ea = ea0 + (ea1 - ea0) * s;
                let eb = eb0 + (eb1 - eb0) * t;
                (ea - eb).abs() <= params.eta_threshold - 1e-9
            });
            if all_close {
                return true;
            }
        }
    }
    false
}

fn point_along(path: &PlannedPath, arc: f64) -> Point2 {
    let mut left = arc;
    for w in path.waypoints.windows(2) {
        let l = w[0].distance(w[1]);
        if left <= l && l > 0.0 {
            return w[0].lerp(w[1], left / l);
        }
        left -= l;
    }
    *path.waypoints.last().unwrap()
}

pub struct ProceedStats {
    pub ticks: usize,
    pub zones: usize,
    pub proceed_pairs: usize,
    pub stops: usize,
    pub heads_checked: usize,
}

/// Builds `snapshots` random coordinator scenes (3–10 robots on planned
/// paths, advanced to random progress) and ticks a fresh coordinator three
/// times on each while the robots creep forward. Every PROCEED pair sharing
/// a zone is re-checked by [`brute_force_conflict`]; on the first tick the
/// robot nearest each zone center must not be stopped by that zone.
pub fn proceed_sets(snapshots: usize, seed: u64) -> Result<(Outcome, ProceedStats), String> {
    let started = Instant::now();
    let map = default_map();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = CoordinatorConfig::default();
    let mut stats = ProceedStats {
        ticks: 0,
        zones: 0,
        proceed_pairs: 0,
        stops: 0,
        heads_checked: 0,
    };
    for case in 0..snapshots {
        let n = rng.gen_range(3..=10);
        let cfg = TrialConfig {
            n_robots: n,
            ..TrialConfig::default()
        };
        let missions = sample_missions(&cfg, &map, &mut rng).map_err(|e| e.to_string())?;
        let speed = cfg.nominal_speed();
        let mut paths = BTreeMap::new();
        let mut arcs = Vec::new();
        for (i, m) in missions.iter().enumerate() {
            let p = plan_path(&map, i as RobotId, m.start, m.goal, 2.0, &[], &PlannerConfig::default())
                .map_err(|e| format!("case {case}: {e}"))?;
            let p = annotate_etas(p, speed, 0.0);
            arcs.push(rng.gen_range(0.0..0.6) * p.length());
            paths.insert(i as RobotId, p);
        }
        let mut coord = Coordinator::new(params);
        let t0 = rng.gen_range(0.0..20.0);
        for tick in 0..3 {
            let now = t0 + tick as f64 * 0.5;
            let poses: Vec<PoseReport> = paths
                .iter()
                .zip(&arcs)
                .map(|((&id, p), &arc)| {
                    let at = point_along(p, arc + tick as f64 * 0.5 * speed);
                    PoseReport {
                        robot_id: id,
                        pose: Pose2::new(at.x, at.y, 0.0),
                        stamp: now,
                    }
                })
                .collect();
            let positions: BTreeMap<RobotId, Point2> =
                poses.iter().map(|p| (p.robot_id, p.pose.position())).collect();
            let snapshot = Snapshot {
                poses,
                paths: paths.clone(),
            };
            let cmds = coord.tick(&snapshot, now).map_err(|e| e.to_string())?;
            stats.ticks += 1;
            let verdict: BTreeMap<RobotId, _> = cmds.iter().map(|c| (c.robot_id, *c)).collect();
            if verdict.len() != cmds.len() {
                return Err(format!("case {case}: duplicate commands for a robot"));
            }
            stats.stops += cmds.iter().filter(|c| c.verdict == Verdict::Stop).count();
            for zone in coord.zones() {
                stats.zones += 1;
                let inside: Vec<RobotId> = zone
                    .members
                    .iter()
                    .copied()
                    .filter(|id| zone.stop_area.contains(positions[id]))
                    .collect();
                let sub = |id: RobotId| {
                    in_zone_subpath(&remaining_path(&paths[&id], positions[&id], now), zone)
                };
                let proceeding: Vec<RobotId> = inside
                    .iter()
                    .copied()
                    .filter(|id| verdict.get(id).is_some_and(|c| c.verdict == Verdict::Proceed))
                    .collect();
                for (k, &a) in proceeding.iter().enumerate() {
                    for &b in &proceeding[k + 1..] {
                        stats.proceed_pairs += 1;
                        if brute_force_conflict(&sub(a), &sub(b), &params.conflict) {
                            return Err(format!(
                                "case {case} tick {tick}: robots {a} and {b} both PROCEED through zone {} but conflict",
                                zone.id
                            ));
                        }
                    }
                }
                if tick == 0 {
                    let center = zone.bbox.center();
                    let head = inside.iter().copied().min_by(|&a, &b| {
                        positions[&a]
                            .distance(center)
                            .total_cmp(&positions[&b].distance(center))
                            .then(a.cmp(&b))
                    });
                    if let Some(head) = head {
                        stats.heads_checked += 1;
                        let c = verdict[&head];
                        if c.verdict == Verdict::Stop && c.zone_id == zone.id {
                            return Err(format!(
                                "case {case}: robot {head} nearest to zone {} was stopped by it",
                                zone.id
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok((
        Outcome {
            cases: snapshots,
            detail: format!(
                "{} ticks, {} zones, {} PROCEED pairs re-checked, {} STOPs",
                stats.ticks, stats.zones, stats.proceed_pairs, stats.stops
            ),
            elapsed: started.elapsed(),
        },
        stats,
    ))
}

// ------------------------------------------------------------ arc rollout

/// Closed-form unicycle pose after `t` seconds at constant `(v, w)`.
pub fn arc_pose(start: Pose2, v: f64, w: f64, t: f64) -> Pose2 {
    let th = start.heading();
    if w.abs() < 1e-12 {
        return Pose2::new(start.x + v * t * th.cos(), start.y + v * t * th.sin(), th);
    }
    let r = v / w;
    Pose2::new(
        start.x + r * ((th + w * t).sin() - th.sin()),
        start.y - r * ((th + w * t).cos() - th.cos()),
        th + w * t,
    )
}

/// Rollout endpoints (and every intermediate pose) at step 1e-3 match the
/// closed-form arc within 1e-3 for random poses and commands.
pub fn rollout_vs_arc(cases: usize, seed: u64) -> Suite {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-3;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let start = Pose2::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-3.2..3.2),
        );
        let v = rng.gen_range(0.0..2.0);
        let w = match case % 4 {
            0 => 0.0,
            _ => rng.gen_range(-1.5..1.5),
        };
        let horizon = rng.gen_range(0.5..std::f64::consts::TAU);
        let poses = rollout(start, VelocityCommand::new(v, w), horizon, step);
        let expected_len = ((horizon / step) - 1e-9).ceil() as usize;
        if poses.len() != expected_len {
            return Err(format!("case {case}: {} poses, expected {expected_len}", poses.len()));
        }
        for (k, p) in poses.iter().enumerate() {
            let t = if k + 1 == poses.len() { horizon } else { (k + 1) as f64 * step };
            let want = arc_pose(start, v, w, t);
            let err = (p.x - want.x).hypot(p.y - want.y);
            let herr = normalize_angle(p.heading() - want.heading()).abs();
            worst = worst.max(err);
            if err > 1e-3 || herr > 1e-3 {
                return Err(format!(
                    "case {case} (v={v}, w={w}, horizon={horizon}) pose {k}: off by {err:.2e} / {herr:.2e} rad"
                ));
            }
        }
    }
    Ok(Outcome {
        cases,
        detail: format!("worst position error {worst:.1e}"),
        elapsed: started.elapsed(),
    })
}
