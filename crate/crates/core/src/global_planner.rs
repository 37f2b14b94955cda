//! Per-robot global planning: 8-connected A* over an inflated occupancy grid,
//! line-of-sight shortcutting, ETA annotation and mission sampling.

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point2};
use crate::world::WorldMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub type RobotId = u32;

/// Attempts before [`sample_mission`] gives up.
pub const MAX_SAMPLING_ATTEMPTS: usize = 10_000;

/// Minimum start–goal separation as a fraction of the arena width.
pub const MISSION_SEPARATION: f64 = 0.75;

/// Trajectory a robot announces to the coordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub robot_id: RobotId,
    pub waypoints: Vec<Point2>,
    pub etas: Vec<f64>,
    pub announced_at: f64,
}

impl PlannedPath {
    /// Builds a path with all ETAs at `now`; call [`annotate_etas`] to fill them.
    pub fn new(robot_id: RobotId, waypoints: Vec<Point2>, now: f64) -> Self {
        let etas = vec![now; waypoints.len()];
        Self {
            robot_id,
            waypoints,
            etas,
            announced_at: now,
        }
    }

    pub fn length(&self) -> f64 {
        path_length(&self.waypoints)
    }

    pub fn goal(&self) -> Point2 {
        *self.waypoints.last().expect("paths are never empty")
    }

    /// Checks the structural invariants: non-empty, matching lengths,
    /// non-decreasing ETAs.
    pub fn is_well_formed(&self) -> bool {
        !self.waypoints.is_empty()
            && self.waypoints.len() == self.etas.len()
            && self.etas.windows(2).all(|w| w[1] >= w[0])
    }
}

pub fn path_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub start: Point2,
    pub goal: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum spacing between consecutive waypoints of the announced path.
    pub waypoint_spacing: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            waypoint_spacing: 1.0,
        }
    }
}

/// Occupancy grid derived from a [`WorldMap`].
///
/// A cell is blocked unless a disc of the inflation radius is free everywhere
/// inside the cell square, so straight moves between the centers of free
/// neighbouring cells are always collision free.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    cols: usize,
    rows: usize,
    resolution: f64,
    blocked: Vec<bool>,
}

pub type Cell = (usize, usize);

impl OccupancyGrid {
    pub fn build(map: &WorldMap, robot_radius: f64, extra_obstacles: &[(Point2, f64)]) -> Self {
        let resolution = map.grid_resolution();
        let cols = (map.width() / resolution).ceil() as usize;
        let rows = (map.height() / resolution).ceil() as usize;
        let half_diag = resolution * std::f64::consts::FRAC_1_SQRT_2;
        let inflated = robot_radius + half_diag;
        let mut blocked = vec![false; cols * rows];
        for r in 0..rows {
            for c in 0..cols {
                let center = Self::center_of(resolution, (c, r));
                blocked[r * cols + c] = !map.is_free_with(center, inflated, extra_obstacles);
            }
        }
        Self {
            cols,
            rows,
            resolution,
            blocked,
        }
    }

    fn center_of(resolution: f64, (c, r): Cell) -> Point2 {
        Point2::new((c as f64 + 0.5) * resolution, (r as f64 + 0.5) * resolution)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn center(&self, cell: Cell) -> Point2 {
        Self::center_of(self.resolution, cell)
    }

    pub fn cell_of(&self, p: Point2) -> Cell {
        let c = ((p.x / self.resolution).floor().max(0.0) as usize).min(self.cols - 1);
        let r = ((p.y / self.resolution).floor().max(0.0) as usize).min(self.rows - 1);
        (c, r)
    }

    pub fn is_blocked(&self, (c, r): Cell) -> bool {
        self.blocked[r * self.cols + c]
    }

    fn index(&self, (c, r): Cell) -> usize {
        r * self.cols + c
    }
}

/// Result of a grid search before any post-processing.
#[derive(Debug, Clone)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub straight_moves: usize,
    pub diagonal_moves: usize,
    pub cost: f64,
}

/// Octile path cost in length units for a given move count.
pub fn octile_cost(straight: usize, diagonal: usize, resolution: f64) -> f64 {
    (straight as f64 + diagonal as f64 * std::f64::consts::SQRT_2) * resolution
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    f: f64,
    g: f64,
    index: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    // BinaryHeap is a max-heap: invert so the smallest f pops first, then the
    // largest g (deeper node), then the lowest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// A* from `start` to `goal` on `grid`, 8-connected with octile costs.
///
/// Diagonal moves require both orthogonal neighbours to be free. The start
/// cell is always enterable; the goal cell must be free.
pub fn astar(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<GridPath> {
    if grid.is_blocked(goal) && start != goal {
        return None;
    }
    let n = grid.cols * grid.rows;
    let mut g_score = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let heuristic = |(c, r): Cell| {
        let dx = c.abs_diff(goal.0) as f64;
        let dy = r.abs_diff(goal.1) as f64;
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        ((hi - lo) + lo * std::f64::consts::SQRT_2) * grid.resolution
    };

    let start_idx = grid.index(start);
    let goal_idx = grid.index(goal);
    g_score[start_idx] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(QueueEntry {
        f: heuristic(start),
        g: 0.0,
        index: start_idx,
    });

    while let Some(QueueEntry { g, index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == goal_idx {
            break;
        }
        let cell = (index % grid.cols, index / grid.cols);
        for &(dc, dr) in &NEIGHBOURS {
            let Some(next) = offset(grid, cell, dc, dr) else {
                continue;
            };
            if grid.is_blocked(next) {
                continue;
            }
            let diagonal = dc != 0 && dr != 0;
            if diagonal {
                let side_a = offset(grid, cell, dc, 0).unwrap();
                let side_b = offset(grid, cell, 0, dr).unwrap();
                if grid.is_blocked(side_a) || grid.is_blocked(side_b) {
                    continue;
                }
            }
            let step = if diagonal {
                std::f64::consts::SQRT_2 * grid.resolution
            } else {
                grid.resolution
            };
            let next_idx = grid.index(next);
            let tentative = g + step;
            if tentative < g_score[next_idx] {
                g_score[next_idx] = tentative;
                parent[next_idx] = index;
                open.push(QueueEntry {
                    f: tentative + heuristic(next),
                    g: tentative,
                    index: next_idx,
                });
            }
        }
    }

    if !closed[goal_idx] {
        return None;
    }
    let mut indices = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != start_idx {
        cur = parent[cur];
        indices.push(cur);
    }
    indices.reverse();
    let cells: Vec<Cell> = indices
        .iter()
        .map(|&i| (i % grid.cols, i / grid.cols))
        .collect();
    let diagonal_moves = cells
        .windows(2)
        .filter(|w| w[0].0 != w[1].0 && w[0].1 != w[1].1)
        .count();
    let straight_moves = cells.len() - 1 - diagonal_moves;
    Some(GridPath {
        cost: octile_cost(straight_moves, diagonal_moves, grid.resolution),
        cells,
        straight_moves,
        diagonal_moves,
    })
}

fn offset(grid: &OccupancyGrid, (c, r): Cell, dc: i64, dr: i64) -> Option<Cell> {
    let nc = c as i64 + dc;
    let nr = r as i64 + dr;
    (nc >= 0 && nr >= 0 && (nc as usize) < grid.cols && (nr as usize) < grid.rows)
        .then_some((nc as usize, nr as usize))
}

/// Exact swept-disc test: a disc of `radius` moving from `a` to `b` stays in
/// the arena and clear of every pillar and extra disc.
pub fn line_of_sight(
    map: &WorldMap,
    a: Point2,
    b: Point2,
    radius: f64,
    extra_obstacles: &[(Point2, f64)],
) -> bool {
    // the arena is convex, so checking both endpoints covers the walls
    map.in_bounds(a, radius)
        && map.in_bounds(b, radius)
        && map
            .pillars()
            .iter()
            .all(|p| point_segment_distance(p.center, a, b) >= p.radius + radius)
        && extra_obstacles
            .iter()
            .all(|&(c, r)| point_segment_distance(c, a, b) >= r + radius)
}

/// Greedy string pulling: from each anchor jump to the farthest waypoint
/// still in line of sight.
pub fn shortcut(
    map: &WorldMap,
    points: &[Point2],
    radius: f64,
    extra_obstacles: &[(Point2, f64)],
) -> Vec<Point2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut anchor = 0;
    while anchor < points.len() - 1 {
        let mut next = anchor + 1;
        for j in (anchor + 2..points.len()).rev() {
            if line_of_sight(map, points[anchor], points[j], radius, extra_obstacles) {
                next = j;
                break;
            }
        }
        out.push(points[next]);
        anchor = next;
    }
    out
}

/// Splits segments so no two consecutive waypoints are more than `spacing`
/// apart. Drops exact duplicates.
pub fn densify(points: &[Point2], spacing: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        if i == 0 {
            out.push(p);
            continue;
        }
        let a = points[i - 1];
        let len = a.distance(p);
        if len == 0.0 {
            continue;
        }
        let pieces = (len / spacing).ceil().max(1.0) as usize;
        for k in 1..pieces {
            out.push(a.lerp(p, k as f64 / pieces as f64));
        }
        out.push(p);
    }
    out
}

/// Everything [`plan_path`] computes, kept for inspection and tests.
#[derive(Debug, Clone)]
pub struct PlanDetails {
    pub grid: OccupancyGrid,
    pub start_cell: Cell,
    pub goal_cell: Cell,
    pub grid_path: GridPath,
    /// start, interior cell centers, goal
    pub raw_waypoints: Vec<Point2>,
    pub shortcut_waypoints: Vec<Point2>,
    pub path: PlannedPath,
}

pub fn plan_path_detailed(
    map: &WorldMap,
    robot_id: RobotId,
    start: Point2,
    goal: Point2,
    robot_radius: f64,
    extra_obstacles: &[(Point2, f64)],
    config: &PlannerConfig,
) -> Result<PlanDetails> {
    if !map.is_free_with(start, robot_radius, extra_obstacles) {
        return Err(Error::InvalidStart {
            x: start.x,
            y: start.y,
        });
    }
    if !map.is_free_with(goal, robot_radius, extra_obstacles) {
        return Err(Error::NoPath);
    }
    let grid = OccupancyGrid::build(map, robot_radius, extra_obstacles);
    let start_cell = grid.cell_of(start);
    let goal_cell = grid.cell_of(goal);
    let grid_path = astar(&grid, start_cell, goal_cell).ok_or(Error::NoPath)?;

    let mut raw = Vec::with_capacity(grid_path.cells.len() + 1);
    raw.push(start);
    if grid_path.cells.len() > 2 {
        raw.extend(
            grid_path.cells[1..grid_path.cells.len() - 1]
                .iter()
                .map(|&c| grid.center(c)),
        );
    }
    if goal != start {
        raw.push(goal);
    }
    let shortcut_waypoints = shortcut(map, &raw, robot_radius, extra_obstacles);
    let waypoints = densify(&shortcut_waypoints, config.waypoint_spacing);
    Ok(PlanDetails {
        grid,
        start_cell,
        goal_cell,
        grid_path,
        raw_waypoints: raw,
        shortcut_waypoints,
        path: PlannedPath::new(robot_id, waypoints, 0.0),
    })
}

/// Plans a collision-free path for a disc of `robot_radius`. ETAs are left at
/// zero; see [`annotate_etas`].
pub fn plan_path(
    map: &WorldMap,
    robot_id: RobotId,
    start: Point2,
    goal: Point2,
    robot_radius: f64,
    extra_obstacles: &[(Point2, f64)],
    config: &PlannerConfig,
) -> Result<PlannedPath> {
    plan_path_detailed(
        map,
        robot_id,
        start,
        goal,
        robot_radius,
        extra_obstacles,
        config,
    )
    .map(|d| d.path)
}

/// Stamps each waypoint with `now + arc length / nominal_speed`.
pub fn annotate_etas(mut path: PlannedPath, nominal_speed: f64, now: f64) -> PlannedPath {
    assert!(nominal_speed > 0.0, "nominal speed must be positive");
    let mut arc = 0.0;
    path.etas.clear();
    for (i, p) in path.waypoints.iter().enumerate() {
        if i > 0 {
            arc += path.waypoints[i - 1].distance(*p);
        }
        path.etas.push(now + arc / nominal_speed);
    }
    path.announced_at = now;
    path
}

/// Rejection-samples a start and goal that are both free at `robot_radius`
/// and at least 75% of the arena width apart.
pub fn sample_mission<R: Rng + ?Sized>(
    map: &WorldMap,
    robot_radius: f64,
    rng: &mut R,
) -> Result<Mission> {
    sample_mission_where(map, robot_radius, rng, |_| true)
}

/// [`sample_mission`] with an extra acceptance predicate.
pub fn sample_mission_where<R, F>(
    map: &WorldMap,
    robot_radius: f64,
    rng: &mut R,
    mut accept: F,
) -> Result<Mission>
where
    R: Rng + ?Sized,
    F: FnMut(&Mission) -> bool,
{
    let min_sep = MISSION_SEPARATION * map.width();
    let (x_lo, x_hi) = (robot_radius, map.width() - robot_radius);
    let (y_lo, y_hi) = (robot_radius, map.height() - robot_radius);
    if !(x_lo < x_hi && y_lo < y_hi) {
        return Err(Error::SamplingExhausted { attempts: 0 });
    }
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let start = Point2::new(rng.gen_range(x_lo..x_hi), rng.gen_range(y_lo..y_hi));
        let goal = Point2::new(rng.gen_range(x_lo..x_hi), rng.gen_range(y_lo..y_hi));
        if start.distance(goal) < min_sep
            || !map.is_free(start, robot_radius)
            || !map.is_free(goal, robot_radius)
        {
            continue;
        }
        let mission = Mission { start, goal };
        if accept(&mission) {
            return Ok(mission);
        }
    }
    Err(Error::SamplingExhausted {
        attempts: MAX_SAMPLING_ATTEMPTS,
    })
}
