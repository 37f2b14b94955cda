//! Fixed-step multi-robot simulation.
//!
//! Each step optionally runs the coordinator, applies its verdicts, lets every
//! free robot pick a DWA command from a simulated LIDAR scan, integrates the
//! motion, books collisions and goal arrivals, and finally replans robots that
//! have been stuck longer than their patience.

pub mod trace;

use crate::coordinator::{Command, Coordinator, CoordinatorConfig, PoseReport, Snapshot, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2};
use crate::global_planner::{
    annotate_etas, plan_path, sample_mission_where, Mission, PlannedPath, PlannerConfig, RobotId,
};
use crate::local_planner::{
    braking_command, integrate, lookahead_target, select_command, simulate_lidar, ControllerState,
    DwaConfig, LidarConfig, VelocityCommand,
};
use crate::world::{build_world, WorldConfig, WorldMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
pub use trace::{TraceCommand, TraceRecord, TraceRobot, TraceZone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Hybrid,
    Decentralized,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Hybrid => "hybrid",
            Mode::Decentralized => "decentralized",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hybrid" => Ok(Mode::Hybrid),
            "decentralized" | "decentralised" => Ok(Mode::Decentralized),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RobotStatus {
    Navigating,
    /// Stopped by the coordinator.
    Held,
    Replanning,
    Reached,
    TimedOut,
}

impl RobotStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, RobotStatus::Reached | RobotStatus::TimedOut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressSample {
    pub t: f64,
    pub position: Point2,
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: RobotId,
    pub pose: Pose2,
    pub velocity: VelocityCommand,
    pub radius: f64,
    pub mission: Mission,
    pub path: PlannedPath,
    pub status: RobotStatus,
    /// Seconds without progress tolerated before a replan.
    pub patience: f64,
    pub progress_history: VecDeque<ProgressSample>,
    pub replan_count: u32,
    pub distance_travelled: f64,
    pub active_steps: u32,
    pub time_to_goal: Option<f64>,
    pub ever_held: bool,
}

impl RobotState {
    pub fn position(&self) -> Point2 {
        self.pose.position()
    }

    fn push_progress(&mut self, t: f64, held: bool) {
        self.progress_history.push_back(ProgressSample {
            t,
            position: self.position(),
            held,
        });
        // keep one sample at or before the start of the window
        while self.progress_history.len() >= 2 && self.progress_history[1].t <= t - self.patience {
            self.progress_history.pop_front();
        }
    }
}

/// Net displacement below `threshold` over the trailing patience window,
/// without any coordinator hold inside that window.
pub fn detect_stuck(robot: &RobotState, now: f64, threshold: f64) -> bool {
    let window_start = now - robot.patience + 1e-9;
    let Some(anchor_idx) = robot
        .progress_history
        .iter()
        .rposition(|s| s.t <= window_start)
    else {
        return false;
    };
    let anchor = robot.progress_history[anchor_idx];
    if robot.progress_history.iter().skip(anchor_idx).any(|s| s.held) {
        return false;
    }
    robot.position().distance(anchor.position) < threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub mode: Mode,
    pub n_robots: usize,
    pub world: WorldConfig,
    pub robot_radius: f64,
    /// Extra clearance added to the robot radius for global planning.
    pub planning_margin: f64,
    pub planner: PlannerConfig,
    pub dwa: DwaConfig,
    pub lidar: LidarConfig,
    pub coordinator: CoordinatorConfig,
    pub dt: f64,
    pub timeout: f64,
    pub goal_tolerance: f64,
    pub stuck_threshold: f64,
    pub patience_min: f64,
    pub patience_max: f64,
    /// ETA speed as a fraction of `v_max`.
    pub nominal_speed_factor: f64,
    /// Minimum gap between sampled starts (and between goals) beyond touching.
    pub spawn_gap: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hybrid,
            n_robots: 1,
            world: WorldConfig::default(),
            robot_radius: 1.5,
            planning_margin: 0.5,
            planner: PlannerConfig::default(),
            dwa: DwaConfig::default(),
            lidar: LidarConfig::default(),
            coordinator: CoordinatorConfig::default(),
            dt: 0.1,
            timeout: 135.0,
            goal_tolerance: 1.5,
            stuck_threshold: 0.5,
            patience_min: 3.0,
            patience_max: 6.0,
            nominal_speed_factor: 0.8,
            spawn_gap: 1.0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_robots == 0 {
            return bad("n_robots must be at least 1");
        }
        if !(self.robot_radius > 0.0) {
            return bad("robot_radius must be > 0");
        }
        if !(self.dt > 0.0 && self.timeout > 0.0) {
            return bad("dt and timeout must be > 0");
        }
        if !(self.patience_min > 0.0 && self.patience_min <= self.patience_max) {
            return bad("patience range must satisfy 0 < min <= max");
        }
        if !(self.nominal_speed_factor > 0.0 && self.dwa.limits.v_max > 0.0) {
            return bad("nominal speed must be > 0");
        }
        if !(self.dwa.horizon >= self.dwa.dt && self.dwa.dt > 0.0) {
            return bad("dwa horizon must be >= dwa dt > 0");
        }
        if self.lidar.rays == 0 || !(self.lidar.max_range > 0.0) {
            return bad("lidar needs at least one ray and a positive range");
        }
        if !(self.planner.waypoint_spacing > 0.0) {
            return bad("waypoint_spacing must be > 0");
        }
        Ok(())
    }

    pub fn nominal_speed(&self) -> f64 {
        self.nominal_speed_factor * self.dwa.limits.v_max
    }

    fn planning_radius(&self) -> f64 {
        self.robot_radius + self.planning_margin
    }

    fn max_steps(&self) -> u32 {
        (self.timeout / self.dt).round() as u32
    }
}

/// Something noteworthy that happened during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimEvent {
    Reached { robot: RobotId, t: f64 },
    TimedOut { robot: RobotId, t: f64 },
    Held { robot: RobotId, t: f64 },
    RobotCollision { a: RobotId, b: RobotId, t: f64 },
    ObstacleCollision { robot: RobotId, t: f64 },
    Infeasible { robot: RobotId, t: f64 },
    Replanned { robot: RobotId, t: f64 },
    ReplanFailed { robot: RobotId, t: f64, error: String },
    CoordinatorError { t: f64, error: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplanOutcome {
    Replanned,
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotOutcome {
    pub id: RobotId,
    pub success: bool,
    /// Distance per step × 100, over the robot's active steps.
    pub avg_speed: f64,
    pub replans: u32,
    pub time_to_goal: Option<f64>,
    pub distance: f64,
    pub active_steps: u32,
    pub ever_held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub mode: Mode,
    pub n_robots: usize,
    pub seed: u64,
    pub robots: Vec<RobotOutcome>,
    pub robot_collisions: u32,
    pub obstacle_collisions: u32,
    /// Coordinator commands issued over the run (0 in decentralized mode).
    pub commands_issued: u64,
    /// Largest number of robots in a single zone at any tick.
    pub max_zone_size: usize,
    pub steps: u32,
    pub wall_ms: u128,
}

impl TrialResult {
    pub fn successes(&self) -> usize {
        self.robots.iter().filter(|r| r.success).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.n_robots as f64
    }

    pub fn avg_speed(&self) -> f64 {
        self.robots.iter().map(|r| r.avg_speed).sum::<f64>() / self.robots.len() as f64
    }

    pub fn total_replans(&self) -> u32 {
        self.robots.iter().map(|r| r.replans).sum()
    }

    pub fn held_robots(&self) -> usize {
        self.robots.iter().filter(|r| r.ever_held).count()
    }
}

pub(crate) fn speed_metric(distance: f64, steps: u32) -> f64 {
    if steps == 0 {
        0.0
    } else {
        distance / steps as f64 * 100.0
    }
}

pub struct Simulation {
    cfg: TrialConfig,
    map: WorldMap,
    robots: Vec<RobotState>,
    coordinator: Option<Coordinator>,
    step_index: u32,
    last_commands: Vec<Command>,
    touching_pairs: BTreeSet<(RobotId, RobotId)>,
    touching_obstacles: BTreeSet<RobotId>,
    robot_collisions: u32,
    obstacle_collisions: u32,
    commands_issued: u64,
    max_zone_size: usize,
    trace: Option<Vec<TraceRecord>>,
    /// `announced_at` of the path last written to the trace, per robot.
    traced_paths: Vec<f64>,
}

impl Simulation {
    /// Sets up robots on the given missions; patience comes from `rng`.
    pub fn new<R: Rng + ?Sized>(
        cfg: TrialConfig,
        map: WorldMap,
        missions: &[Mission],
        rng: &mut R,
        record_trace: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut robots = Vec::with_capacity(missions.len());
        for (i, m) in missions.iter().enumerate() {
            let id = i as RobotId;
            let path = plan_with_fallback(&cfg, &map, id, m.start, m.goal, &[])?;
            let path = annotate_etas(path, cfg.nominal_speed(), 0.0);
            let target = lookahead_target(&path.waypoints, m.start, cfg.dwa.lookahead);
            let heading = if target.distance(m.start) > 1e-9 {
                (target.y - m.start.y).atan2(target.x - m.start.x)
            } else {
                0.0
            };
            let patience = if cfg.patience_max > cfg.patience_min {
                rng.gen_range(cfg.patience_min..=cfg.patience_max)
            } else {
                cfg.patience_min
            };
            let mut robot = RobotState {
                id,
                pose: Pose2::new(m.start.x, m.start.y, heading),
                velocity: VelocityCommand::STOP,
                radius: cfg.robot_radius,
                mission: *m,
                path,
                status: RobotStatus::Navigating,
                patience,
                progress_history: VecDeque::new(),
                replan_count: 0,
                distance_travelled: 0.0,
                active_steps: 0,
                time_to_goal: None,
                ever_held: false,
            };
            if robot.position().distance(m.goal) <= cfg.goal_tolerance {
                robot.status = RobotStatus::Reached;
                robot.time_to_goal = Some(0.0);
            }
            robot.push_progress(0.0, false);
            robots.push(robot);
        }
        let coordinator = (cfg.mode == Mode::Hybrid).then(|| Coordinator::new(cfg.coordinator));
        let mut sim = Self {
            cfg,
            map,
            robots,
            coordinator,
            step_index: 0,
            last_commands: Vec::new(),
            touching_pairs: BTreeSet::new(),
            touching_obstacles: BTreeSet::new(),
            robot_collisions: 0,
            obstacle_collisions: 0,
            commands_issued: 0,
            max_zone_size: 0,
            trace: record_trace.then(Vec::new),
            traced_paths: Vec::new(),
        };
        sim.record();
        Ok(sim)
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn config(&self) -> &TrialConfig {
        &self.cfg
    }

    pub fn coordinator(&self) -> Option<&Coordinator> {
        self.coordinator.as_ref()
    }

    /// Simulation time in seconds.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.cfg.dt
    }

    pub fn last_commands(&self) -> &[Command] {
        &self.last_commands
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn is_finished(&self) -> bool {
        self.robots.iter().all(|r| r.status.is_terminal())
    }

    fn active_discs(&self, except: RobotId) -> Vec<(Point2, f64)> {
        self.robots
            .iter()
            .filter(|r| r.id != except && !r.status.is_terminal())
            .map(|r| (r.position(), r.radius))
            .collect()
    }

    /// Advances the world by one `dt`.
    pub fn step(&mut self) -> Vec<SimEvent> {
        let mut events = Vec::new();
        if self.is_finished() {
            return events;
        }
        let now = self.time();
        let dt = self.cfg.dt;

        // (1) coordinator verdicts
        let mut held: BTreeSet<RobotId> = BTreeSet::new();
        self.last_commands.clear();
        if let Some(coord) = self.coordinator.as_mut() {
            let snapshot = Snapshot {
                poses: self
                    .robots
                    .iter()
                    .filter(|r| !r.status.is_terminal())
                    .map(|r| PoseReport {
                        robot_id: r.id,
                        pose: r.pose,
                        stamp: now,
                    })
                    .collect(),
                paths: self
                    .robots
                    .iter()
                    .filter(|r| !r.status.is_terminal())
                    .map(|r| (r.id, r.path.clone()))
                    .collect(),
            };
            match coord.tick(&snapshot, now) {
                Ok(cmds) => {
                    held.extend(
                        cmds.iter()
                            .filter(|c| c.verdict == Verdict::Stop)
                            .map(|c| c.robot_id),
                    );
                    self.commands_issued += cmds.len() as u64;
                    self.last_commands = cmds;
                }
                Err(e) => events.push(SimEvent::CoordinatorError {
                    t: now,
                    error: e.to_string(),
                }),
            }
            let biggest = coord.zones().iter().map(|z| z.members.len()).max().unwrap_or(0);
            self.max_zone_size = self.max_zone_size.max(biggest);
        }
        for r in self.robots.iter_mut().filter(|r| !r.status.is_terminal()) {
            if held.contains(&r.id) {
                if r.status != RobotStatus::Held {
                    events.push(SimEvent::Held { robot: r.id, t: now });
                }
                r.status = RobotStatus::Held;
                r.ever_held = true;
            } else {
                r.status = RobotStatus::Navigating;
            }
        }

        // (2) control from a common snapshot, then integrate together
        let mut commands = Vec::with_capacity(self.robots.len());
        for r in &self.robots {
            if r.status.is_terminal() {
                commands.push(None);
                continue;
            }
            if r.status == RobotStatus::Held {
                commands.push(Some(VelocityCommand::STOP));
                continue;
            }
            let others = self.active_discs(r.id);
            let scan = simulate_lidar(&self.map, &others, r.pose, &self.cfg.lidar);
            let state = ControllerState {
                pose: r.pose,
                velocity: r.velocity,
                radius: r.radius,
            };
            let cmd = match select_command(&state, &r.path, &scan, &self.cfg.dwa) {
                Ok(c) => c,
                Err(_) => {
                    events.push(SimEvent::Infeasible { robot: r.id, t: now });
                    braking_command(r.velocity, &self.cfg.dwa.limits, self.cfg.dwa.dt)
                }
            };
            commands.push(Some(cmd));
        }
        for (r, cmd) in self.robots.iter_mut().zip(commands) {
            let Some(cmd) = cmd else { continue };
            let before = r.position();
            r.pose = integrate(r.pose, cmd, dt);
            r.velocity = cmd;
            r.distance_travelled += (r.pose.x - before.x).hypot(r.pose.y - before.y);
            r.active_steps += 1;
        }
        self.step_index += 1;
        let t = self.time();

        // (3) collisions, counted on contact onset
        let mut touching = BTreeSet::new();
        for (i, a) in self.robots.iter().enumerate() {
            if a.status.is_terminal() {
                continue;
            }
            for b in &self.robots[i + 1..] {
                if b.status.is_terminal() {
                    continue;
                }
                if a.position().distance(b.position()) < a.radius + b.radius {
                    touching.insert((a.id, b.id));
                }
            }
        }
        for &(a, b) in touching.difference(&self.touching_pairs) {
            self.robot_collisions += 1;
            events.push(SimEvent::RobotCollision { a, b, t });
        }
        self.touching_pairs = touching;
        let mut hitting = BTreeSet::new();
        for r in self.robots.iter().filter(|r| !r.status.is_terminal()) {
            if !self.map.is_free(r.position(), r.radius) {
                hitting.insert(r.id);
            }
        }
        for &id in hitting.difference(&self.touching_obstacles) {
            self.obstacle_collisions += 1;
            events.push(SimEvent::ObstacleCollision { robot: id, t });
        }
        self.touching_obstacles = hitting;

        // (4) goals
        for r in self.robots.iter_mut().filter(|r| !r.status.is_terminal()) {
            if r.position().distance(r.mission.goal) <= self.cfg.goal_tolerance {
                r.status = RobotStatus::Reached;
                r.velocity = VelocityCommand::STOP;
                r.time_to_goal = Some(t);
                events.push(SimEvent::Reached { robot: r.id, t });
            }
        }
        self.touching_pairs
            .retain(|(a, b)| !self.robots[*a as usize].status.is_terminal() && !self.robots[*b as usize].status.is_terminal());

        // (5) stuck robots replan
        let mut stuck = Vec::new();
        for r in self.robots.iter_mut().filter(|r| !r.status.is_terminal()) {
            let is_held = r.status == RobotStatus::Held;
            r.push_progress(t, is_held);
            if !is_held && detect_stuck(r, t, self.cfg.stuck_threshold) {
                stuck.push(r.id);
            }
        }
        for id in stuck {
            match self.trigger_replan(id) {
                Ok(ReplanOutcome::Replanned) => events.push(SimEvent::Replanned { robot: id, t }),
                Ok(ReplanOutcome::NoPath) => events.push(SimEvent::ReplanFailed {
                    robot: id,
                    t,
                    error: Error::NoPath.to_string(),
                }),
                Err(e) => events.push(SimEvent::ReplanFailed {
                    robot: id,
                    t,
                    error: e.to_string(),
                }),
            }
        }

        if self.step_index >= self.cfg.max_steps() {
            for r in self.robots.iter_mut().filter(|r| !r.status.is_terminal()) {
                r.status = RobotStatus::TimedOut;
                r.velocity = VelocityCommand::STOP;
                events.push(SimEvent::TimedOut { robot: r.id, t });
            }
        }

        // (6) trace
        self.record();
        events
    }

    /// Replans `robot_id` around the other robots' current positions.
    ///
    /// The replan counter grows even when no path is found; either way the
    /// robot's progress window restarts so the next attempt waits a full
    /// patience period.
    pub fn trigger_replan(&mut self, robot_id: RobotId) -> Result<ReplanOutcome> {
        let now = self.time();
        let idx = robot_id as usize;
        let me = &self.robots[idx];
        let start = me.position();
        let plan_r = self.cfg.planning_radius();
        let half_diag = self.map.grid_resolution() * std::f64::consts::FRAC_1_SQRT_2;
        // shrink obstacles hugging the robot so it can plan its way out
        let extras: Vec<(Point2, f64)> = self
            .active_discs(robot_id)
            .into_iter()
            .map(|(c, r)| {
                let room = c.distance(start) - plan_r - half_diag - self.map.grid_resolution();
                (c, r.min(room).max(0.0))
            })
            .collect();
        let goal = me.mission.goal;
        let robot = &mut self.robots[idx];
        robot.replan_count += 1;
        robot.progress_history.clear();
        robot.push_progress(now, false);
        match plan_with_fallback(&self.cfg, &self.map, robot_id, start, goal, &extras) {
            Ok(path) => {
                let robot = &mut self.robots[idx];
                robot.path = annotate_etas(path, self.cfg.nominal_speed(), now);
                robot.status = RobotStatus::Replanning;
                Ok(ReplanOutcome::Replanned)
            }
            Err(Error::NoPath) | Err(Error::InvalidStart { .. }) => Ok(ReplanOutcome::NoPath),
            Err(e) => Err(e),
        }
    }

    fn record(&mut self) {
        let Some(trace) = self.trace.as_mut() else {
            return;
        };
        self.traced_paths.resize(self.robots.len(), f64::NAN);
        let zones = self
            .coordinator
            .as_ref()
            .map(|c| {
                c.zones()
                    .iter()
                    .chain(c.static_zones())
                    .map(|z| TraceZone {
                        id: z.id,
                        bbox: z.bbox.as_array(),
                        occupied: z.is_occupied(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        trace.push(TraceRecord {
            t: self.step_index as f64 * self.cfg.dt,
            robots: self
                .robots
                .iter()
                .zip(self.traced_paths.iter_mut())
                .map(|(r, mark)| {
                    // paths are written only when they change
                    let path = (*mark != r.path.announced_at).then(|| {
                        *mark = r.path.announced_at;
                        r.path.waypoints.iter().map(|p| [p.x, p.y]).collect()
                    });
                    TraceRobot {
                        id: r.id,
                        x: r.pose.x,
                        y: r.pose.y,
                        heading: r.pose.heading(),
                        status: r.status,
                        replans: r.replan_count,
                        path,
                    }
                })
                .collect(),
            zones,
            cmds: self
                .last_commands
                .iter()
                .map(|c| TraceCommand {
                    robot: c.robot_id,
                    verdict: c.verdict,
                    zone: c.zone_id,
                })
                .collect(),
        });
    }

    /// Runs until every robot is terminal.
    pub fn run(&mut self) -> Vec<SimEvent> {
        let mut events = Vec::new();
        while !self.is_finished() {
            events.extend(self.step());
        }
        events
    }

    pub fn result(&self, seed: u64, wall_ms: u128) -> TrialResult {
        TrialResult {
            mode: self.cfg.mode,
            n_robots: self.robots.len(),
            seed,
            robots: self
                .robots
                .iter()
                .map(|r| RobotOutcome {
                    id: r.id,
                    success: r.status == RobotStatus::Reached,
                    avg_speed: speed_metric(r.distance_travelled, r.active_steps),
                    replans: r.replan_count,
                    time_to_goal: r.time_to_goal,
                    distance: r.distance_travelled,
                    active_steps: r.active_steps,
                    ever_held: r.ever_held,
                })
                .collect(),
            robot_collisions: self.robot_collisions,
            obstacle_collisions: self.obstacle_collisions,
            commands_issued: self.commands_issued,
            max_zone_size: self.max_zone_size,
            steps: self.step_index,
            wall_ms,
        }
    }
}

/// Plans with the extra planning margin, falling back to the bare robot
/// radius when the start is too tight for the margin.
fn plan_with_fallback(
    cfg: &TrialConfig,
    map: &WorldMap,
    id: RobotId,
    start: Point2,
    goal: Point2,
    extras: &[(Point2, f64)],
) -> Result<PlannedPath> {
    // a robot that already sits closer to something than the full margin
    // plans with whatever margin it has, so its path never hugs obstacles
    // tighter than the controller will accept
    let room = map.clearance(start, extras) - 1e-6;
    let radius = cfg.planning_radius().min(room).max(cfg.robot_radius);
    match plan_path(map, id, start, goal, radius, extras, &cfg.planner) {
        Err(Error::InvalidStart { .. }) | Err(Error::NoPath) if radius > cfg.robot_radius => {
            plan_path(map, id, start, goal, cfg.robot_radius, extras, &cfg.planner)
        }
        other => other,
    }
}

/// Samples one mission per robot: starts pairwise apart, goals pairwise
/// apart, and every pair plannable on the empty map.
pub fn sample_missions<R: Rng + ?Sized>(
    cfg: &TrialConfig,
    map: &WorldMap,
    rng: &mut R,
) -> Result<Vec<Mission>> {
    let min_gap = 2.0 * cfg.robot_radius + cfg.spawn_gap;
    let mut missions: Vec<Mission> = Vec::with_capacity(cfg.n_robots);
    for i in 0..cfg.n_robots {
        let m = sample_mission_where(map, cfg.planning_radius(), rng, |m| {
            missions.iter().all(|o| {
                o.start.distance(m.start) >= min_gap && o.goal.distance(m.goal) >= min_gap
            }) && plan_path(
                map,
                i as RobotId,
                m.start,
                m.goal,
                cfg.planning_radius(),
                &[],
                &cfg.planner,
            )
            .is_ok()
        })?;
        missions.push(m);
    }
    Ok(missions)
}

/// Runs one trial with randomly sampled missions.
pub fn run_trial(cfg: &TrialConfig, seed: u64) -> Result<TrialResult> {
    run_trial_traced(cfg, seed, false).map(|(r, _)| r)
}

pub fn run_trial_traced(
    cfg: &TrialConfig,
    seed: u64,
    record_trace: bool,
) -> Result<(TrialResult, Option<Vec<TraceRecord>>)> {
    cfg.validate()?;
    let started = Instant::now();
    let map = build_world(&cfg.world)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let missions = sample_missions(cfg, &map, &mut rng)?;
    let mut sim = Simulation::new(cfg.clone(), map, &missions, &mut rng, record_trace)?;
    sim.run();
    let result = sim.result(seed, started.elapsed().as_millis());
    Ok((result, sim.trace))
}

/// Runs a trial on fixed missions (scripted scenarios).
pub fn run_scenario(
    cfg: &TrialConfig,
    missions: &[Mission],
    seed: u64,
    record_trace: bool,
) -> Result<(TrialResult, Option<Vec<TraceRecord>>)> {
    let started = Instant::now();
    let map = build_world(&cfg.world)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Simulation::new(cfg.clone(), map, missions, &mut rng, record_trace)?;
    sim.run();
    let result = sim.result(seed, started.elapsed().as_millis());
    Ok((result, sim.trace))
}
