//! Flat `key = value` sweep configuration.

use crate::error::{Error, Result};
use crate::simulation::{Mode, TrialConfig};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub modes: Vec<Mode>,
    pub robot_counts: Vec<usize>,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    /// Parameters shared by every trial; `mode` and `n_robots` are set per cell.
    pub trial: TrialConfig,
    pub out_dir: PathBuf,
    /// Number of leading trials per cell whose step trace is written.
    pub traces_per_cell: usize,
    pub plots: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Hybrid, Mode::Decentralized],
            robot_counts: (1..=10).collect(),
            trials_per_cell: 50,
            base_seed: 2024,
            trial: TrialConfig::default(),
            out_dir: PathBuf::from("results"),
            traces_per_cell: 0,
            plots: false,
        }
    }
}

/// Every key accepted in a config file, in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "modes",
    "robot_counts",
    "trials_per_cell",
    "base_seed",
    "out_dir",
    "traces_per_cell",
    "plots",
    "world_width",
    "world_height",
    "pillar_rows",
    "pillar_cols",
    "pillar_radius",
    "grid_resolution",
    "robot_radius",
    "planning_margin",
    "waypoint_spacing",
    "dt",
    "timeout",
    "goal_tolerance",
    "stuck_threshold",
    "patience_min",
    "patience_max",
    "nominal_speed_factor",
    "spawn_gap",
    "v_max",
    "v_min",
    "w_max",
    "a_lin",
    "a_ang",
    "dwa_horizon",
    "dwa_dt",
    "v_samples",
    "w_samples",
    "w_heading",
    "w_clearance",
    "w_velocity",
    "safety_margin",
    "lookahead",
    "lidar_rays",
    "lidar_span_deg",
    "lidar_max_range",
    "eta_threshold",
    "conflict_clearance",
    "stop_margin",
    "staleness",
    "stall_time",
    "stall_distance",
];

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::InvalidConfig(format!("line {}: {msg}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(at(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::InvalidConfig(m) => at(m),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::InvalidConfig("trials_per_cell must be at least 1".into()));
        }
        if self.robot_counts.is_empty() || self.robot_counts.contains(&0) {
            return Err(Error::InvalidConfig(
                "robot_counts must be non-empty and positive".into(),
            ));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("modes must be non-empty".into()));
        }
        self.trial.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.trial;
        match key {
            "modes" => self.modes = parse_modes(value)?,
            "robot_counts" => self.robot_counts = parse_counts(value)?,
            "trials_per_cell" => self.trials_per_cell = num(key, value)?,
            "base_seed" => self.base_seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "traces_per_cell" => self.traces_per_cell = num(key, value)?,
            "plots" => self.plots = num(key, value)?,
            "world_width" => t.world.width = num(key, value)?,
            "world_height" => t.world.height = num(key, value)?,
            "pillar_rows" => t.world.pillar_rows = num(key, value)?,
            "pillar_cols" => t.world.pillar_cols = num(key, value)?,
            "pillar_radius" => t.world.pillar_radius = num(key, value)?,
            "grid_resolution" => t.world.grid_resolution = num(key, value)?,
            "robot_radius" => t.robot_radius = num(key, value)?,
            "planning_margin" => t.planning_margin = num(key, value)?,
            "waypoint_spacing" => t.planner.waypoint_spacing = num(key, value)?,
            "dt" => t.dt = num(key, value)?,
            "timeout" => t.timeout = num(key, value)?,
            "goal_tolerance" => t.goal_tolerance = num(key, value)?,
            "stuck_threshold" => t.stuck_threshold = num(key, value)?,
            "patience_min" => t.patience_min = num(key, value)?,
            "patience_max" => t.patience_max = num(key, value)?,
            "nominal_speed_factor" => t.nominal_speed_factor = num(key, value)?,
            "spawn_gap" => t.spawn_gap = num(key, value)?,
            "v_max" => t.dwa.limits.v_max = num(key, value)?,
            "v_min" => t.dwa.limits.v_min = num(key, value)?,
            "w_max" => t.dwa.limits.w_max = num(key, value)?,
            "a_lin" => t.dwa.limits.a_lin = num(key, value)?,
            "a_ang" => t.dwa.limits.a_ang = num(key, value)?,
            "dwa_horizon" => t.dwa.horizon = num(key, value)?,
            "dwa_dt" => t.dwa.dt = num(key, value)?,
            "v_samples" => t.dwa.v_samples = num(key, value)?,
            "w_samples" => t.dwa.w_samples = num(key, value)?,
            "w_heading" => t.dwa.w_heading = num(key, value)?,
            "w_clearance" => t.dwa.w_clearance = num(key, value)?,
            "w_velocity" => t.dwa.w_velocity = num(key, value)?,
            "safety_margin" => t.dwa.safety_margin = num(key, value)?,
            "lookahead" => t.dwa.lookahead = num(key, value)?,
            "lidar_rays" => t.lidar.rays = num(key, value)?,
            "lidar_span_deg" => t.lidar.span = num::<f64>(key, value)?.to_radians(),
            "lidar_max_range" => t.lidar.max_range = num(key, value)?,
            "eta_threshold" => t.coordinator.conflict.eta_threshold = num(key, value)?,
            "conflict_clearance" => t.coordinator.conflict.clearance = num(key, value)?,
            "stop_margin" => t.coordinator.stop_margin = num(key, value)?,
            "staleness" => t.coordinator.staleness = num(key, value)?,
            "stall_time" => t.coordinator.stall_time = num(key, value)?,
            "stall_distance" => t.coordinator.stall_distance = num(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

fn parse_modes(value: &str) -> Result<Vec<Mode>> {
    let mut out = Vec::new();
    for m in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mode: Mode = m
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unknown mode `{m}`")))?;
        if !out.contains(&mode) {
            out.push(mode);
        }
    }
    Ok(out)
}

/// `2, 4, 6` or an inclusive range `1..10` (or a mix).
fn parse_counts(value: &str) -> Result<Vec<usize>> {
    let mut out = BTreeSet::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (num("robot_counts", a.trim())?, num("robot_counts", b.trim())?);
            if a > b {
                return Err(Error::InvalidConfig(format!("empty range `{part}`")));
            }
            out.extend(a..=b);
        } else {
            out.insert(num("robot_counts", part)?);
        }
    }
    Ok(out.into_iter().collect())
}
