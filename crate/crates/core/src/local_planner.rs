//! Dynamic Window Approach controller and the simulated LIDAR feeding it.

use crate::geometry::{normalize_angle, project_onto_segment, Point2, Pose2};
use crate::global_planner::PlannedPath;
use crate::world::WorldMap;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub v_min: f64,
    pub w_max: f64,
    pub a_lin: f64,
    pub a_ang: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            v_min: 0.0,
            w_max: 1.5,
            a_lin: 2.0,
            a_ang: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub w: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand { v: 0.0, w: 0.0 };

    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - 1e-12 && x <= self.hi + 1e-12
    }

    fn sample(&self, i: usize, n: usize) -> f64 {
        if self.hi <= self.lo {
            return self.lo;
        }
        if n <= 1 {
            return 0.5 * (self.lo + self.hi);
        }
        if i + 1 == n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64
        }
    }
}

/// Velocities reachable from `current` within one control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicWindow {
    pub linear: Interval,
    pub angular: Interval,
}

impl DynamicWindow {
    pub fn contains(&self, cmd: VelocityCommand) -> bool {
        self.linear.contains(cmd.v) && self.angular.contains(cmd.w)
    }
}

pub fn dynamic_window(current: VelocityCommand, limits: &KinematicLimits, dt: f64) -> DynamicWindow {
    debug_assert!(dt > 0.0);
    let mut linear = Interval {
        lo: limits.v_min.max(current.v - limits.a_lin * dt),
        hi: limits.v_max.min(current.v + limits.a_lin * dt),
    };
    let mut angular = Interval {
        lo: (-limits.w_max).max(current.w - limits.a_ang * dt),
        hi: limits.w_max.min(current.w + limits.a_ang * dt),
    };
    // a velocity outside the limits (e.g. after a forced stop) still yields a
    // non-empty window
    if linear.lo > linear.hi {
        let v = linear.lo.min(linear.hi);
        linear = Interval { lo: v, hi: v };
    }
    if angular.lo > angular.hi {
        let w = if current.w > 0.0 { angular.hi } else { angular.lo };
        angular = Interval { lo: w, hi: w };
    }
    DynamicWindow { linear, angular }
}

/// Advances a unicycle at constant `cmd` for `dt` (midpoint heading rule).
pub fn integrate(pose: Pose2, cmd: VelocityCommand, dt: f64) -> Pose2 {
    let mid = pose.heading() + 0.5 * cmd.w * dt;
    Pose2::new(
        pose.x + cmd.v * mid.cos() * dt,
        pose.y + cmd.v * mid.sin() * dt,
        pose.heading() + cmd.w * dt,
    )
}

fn rollout_steps(horizon: f64, step: f64) -> usize {
    ((horizon / step) - 1e-9).ceil().max(1.0) as usize
}

/// Constant-velocity trajectory: ⌈horizon/step⌉ poses, the last at `horizon`.
pub fn rollout(pose: Pose2, cmd: VelocityCommand, horizon: f64, step: f64) -> Vec<Pose2> {
    let mut out = Vec::new();
    rollout_into(pose, cmd, horizon, step, &mut out);
    out
}

fn rollout_into(pose: Pose2, cmd: VelocityCommand, horizon: f64, step: f64, out: &mut Vec<Pose2>) {
    debug_assert!(horizon >= step && step > 0.0);
    out.clear();
    let n = rollout_steps(horizon, step);
    // midpoint headings advance by a fixed rotation, so one sincos per rollout
    // covers every full step; only a shorter final step needs its own
    let (rs, rc) = (cmd.w * step).sin_cos();
    let (mut s, mut c) = (pose.heading() + 0.5 * cmd.w * step).sin_cos();
    let (mut x, mut y) = (pose.x, pose.y);
    let mut t = 0.0;
    for k in 1..=n {
        let next_t = if k == n { horizon } else { k as f64 * step };
        let h = next_t - t;
        if k == n && (h - step).abs() > 1e-12 {
            let mid = pose.heading() + cmd.w * (t + 0.5 * h);
            x += cmd.v * mid.cos() * h;
            y += cmd.v * mid.sin() * h;
        } else {
            x += cmd.v * c * h;
            y += cmd.v * s * h;
        }
        t = next_t;
        out.push(Pose2::new(x, y, pose.heading() + cmd.w * t));
        (s, c) = (s * rc + c * rs, c * rc - s * rs);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub rays: usize,
    /// Angular span in radians, centered on the robot heading.
    pub span: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rays: 72,
            span: 2.0 * PI,
            max_range: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub origin: Pose2,
    /// Ray angles relative to the heading.
    pub angles: Vec<f64>,
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl LidarScan {
    /// World coordinates of every ray that hit something before max range.
    pub fn hit_points(&self) -> impl Iterator<Item = Point2> + '_ {
        let o = self.origin;
        self.angles
            .iter()
            .zip(&self.ranges)
            .filter(|(_, &r)| r < self.max_range)
            .map(move |(&a, &r)| {
                let th = o.heading() + a;
                Point2::new(o.x + r * th.cos(), o.y + r * th.sin())
            })
    }
}

/// Relative ray angles: a full circle has no duplicate end ray, a partial
/// span includes both edges.
pub fn ray_angles(cfg: &LidarConfig) -> Vec<f64> {
    let n = cfg.rays.max(1);
    if n == 1 {
        return vec![0.0];
    }
    let full = cfg.span >= 2.0 * PI - 1e-12;
    let step = if full {
        cfg.span / n as f64
    } else {
        cfg.span / (n - 1) as f64
    };
    (0..n).map(|i| -0.5 * cfg.span + i as f64 * step).collect()
}

pub fn simulate_lidar(
    map: &WorldMap,
    others: &[(Point2, f64)],
    pose: Pose2,
    cfg: &LidarConfig,
) -> LidarScan {
    let angles = ray_angles(cfg);
    let origin = pose.position();
    let ranges = angles
        .iter()
        .map(|a| map.raycast(origin, pose.heading() + a, cfg.max_range, others))
        .collect();
    LidarScan {
        origin: pose,
        angles,
        ranges,
        max_range: cfg.max_range,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwaConfig {
    pub limits: KinematicLimits,
    pub horizon: f64,
    pub dt: f64,
    pub v_samples: usize,
    pub w_samples: usize,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    /// Extra distance kept on top of the robot radius when filtering rollouts.
    pub safety_margin: f64,
    /// Arc length ahead of the robot's projection on the path to steer at.
    pub lookahead: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            limits: KinematicLimits::default(),
            horizon: 1.5,
            dt: 0.1,
            v_samples: 11,
            w_samples: 21,
            w_heading: 0.8,
            w_clearance: 0.2,
            w_velocity: 0.1,
            safety_margin: 0.1,
            lookahead: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

/// Where a robot sits along a path and where it should steer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProgress {
    /// Index of the segment start (or the only waypoint) nearest the robot.
    pub segment: usize,
    /// Parameter of the projection inside that segment.
    pub along: f64,
    pub projection: Point2,
}

/// Projects `p` onto the closest segment of `waypoints` (first one on ties).
pub fn project_on_path(waypoints: &[Point2], p: Point2) -> PathProgress {
    if waypoints.len() < 2 {
        return PathProgress {
            segment: 0,
            along: 0.0,
            projection: waypoints[0],
        };
    }
    let mut best = (f64::INFINITY, 0, 0.0, waypoints[0]);
    for (i, w) in waypoints.windows(2).enumerate() {
        let s = project_onto_segment(p, w[0], w[1]);
        let q = w[0].lerp(w[1], s);
        let d = q.distance_sq(p);
        if d < best.0 {
            best = (d, i, s, q);
        }
    }
    PathProgress {
        segment: best.1,
        along: best.2,
        projection: best.3,
    }
}

/// Point `lookahead` further along the path than the projection of `p`.
pub fn lookahead_target(waypoints: &[Point2], p: Point2, lookahead: f64) -> Point2 {
    let prog = project_on_path(waypoints, p);
    let mut remaining = lookahead;
    let mut cur = prog.projection;
    for &next in &waypoints[(prog.segment + 1).min(waypoints.len() - 1)..] {
        let d = cur.distance(next);
        if d >= remaining {
            return cur.lerp(next, remaining / d);
        }
        remaining -= d;
        cur = next;
    }
    *waypoints.last().unwrap()
}

/// Kinematic state the controller needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub pose: Pose2,
    pub velocity: VelocityCommand,
    pub radius: f64,
}

/// Picks the best admissible command in the dynamic window.
///
/// A command is admissible when its rollout keeps at least
/// `radius + safety_margin` from every scan hit; a robot already inside that
/// band may only take commands that do not bring it any closer.
pub fn select_command(
    state: &ControllerState,
    path: &PlannedPath,
    scan: &LidarScan,
    cfg: &DwaConfig,
) -> Result<VelocityCommand, Infeasible> {
    let window = dynamic_window(state.velocity, &cfg.limits, cfg.dt);
    let target = lookahead_target(&path.waypoints, state.pose.position(), cfg.lookahead);
    let origin = state.pose.position();

    // obstacles sorted by range so each pose can stop scanning once the
    // triangle-inequality bound exceeds its best distance
    let mut obstacles: Vec<(f64, Point2)> = scan
        .hit_points()
        .map(|p| (p.distance(origin), p))
        .collect();
    obstacles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let current_clearance = obstacles.first().map_or(f64::INFINITY, |o| o.0);

    let required = state.radius + cfg.safety_margin;
    let floor = if current_clearance >= required {
        required
    } else {
        current_clearance - 1e-9
    };

    let mut poses = Vec::with_capacity(rollout_steps(cfg.horizon, cfg.dt));
    let mut best: Option<(f64, VelocityCommand)> = None;
    for iv in 0..cfg.v_samples.max(1) {
        let v = window.linear.sample(iv, cfg.v_samples);
        for iw in 0..cfg.w_samples.max(1) {
            let w = window.angular.sample(iw, cfg.w_samples);
            let cmd = VelocityCommand { v, w };
            rollout_into(state.pose, cmd, cfg.horizon, cfg.dt, &mut poses);

            let mut min_d = f64::INFINITY;
            for q in &poses {
                let qp = q.position();
                let offset = qp.distance(origin);
                let mut min_sq = min_d * min_d;
                for &(range, o) in &obstacles {
                    if range - offset >= min_d {
                        break;
                    }
                    let d_sq = o.distance_sq(qp);
                    if d_sq < min_sq {
                        min_sq = d_sq;
                        min_d = d_sq.sqrt();
                    }
                }
                if min_d < floor {
                    break;
                }
            }
            if min_d < floor {
                continue;
            }

            let end = poses.last().copied().unwrap_or(state.pose);
            let to_target = target - end.position();
            let heading_term = if to_target.norm() < 1e-9 {
                1.0
            } else {
                let err = normalize_angle(to_target.y.atan2(to_target.x) - end.heading());
                1.0 - err.abs() / PI
            };
            let clearance_term = (min_d / scan.max_range).min(1.0);
            let velocity_term = if cfg.limits.v_max > 0.0 {
                (v / cfg.limits.v_max).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let score = cfg.w_heading * heading_term
                + cfg.w_clearance * clearance_term
                + cfg.w_velocity * velocity_term;

            let better = match best {
                None => true,
                Some((bs, bc)) => {
                    score > bs
                        || (score == bs
                            && (v > bc.v
                                || (v == bc.v
                                    && (w.abs() < bc.w.abs()
                                        || (w.abs() == bc.w.abs() && w < bc.w)))))
                }
            };
            if better {
                best = Some((score, cmd));
            }
        }
    }
    best.map(|(_, c)| c).ok_or(Infeasible)
}

/// Command applied when nothing is admissible: brake as hard as allowed.
pub fn braking_command(current: VelocityCommand, limits: &KinematicLimits, dt: f64) -> VelocityCommand {
    let v = (current.v - limits.a_lin * dt).max(0.0).min(current.v.max(0.0));
    let dw = limits.a_ang * dt;
    let w = if current.w > dw {
        current.w - dw
    } else if current.w < -dw {
        current.w + dw
    } else {
        0.0
    };
    VelocityCommand { v, w }
}
