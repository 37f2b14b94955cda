//! Static arena: rectangular bounds with a grid of circular pillars.

use crate::error::{Error, Result};
use crate::geometry::{ray_circle, Point2};
use serde::{Deserialize, Serialize};

pub use crate::geometry::Pose2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pillar {
    pub center: Point2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
    pub pillar_rows: usize,
    pub pillar_cols: usize,
    pub pillar_radius: f64,
    pub grid_resolution: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 50.0,
            height: 50.0,
            pillar_rows: 4,
            pillar_cols: 4,
            pillar_radius: 2.0,
            grid_resolution: 0.5,
        }
    }
}

/// Immutable once built; share freely between threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    width: f64,
    height: f64,
    pillars: Vec<Pillar>,
    grid_resolution: f64,
}

/// Places `rows × cols` pillars on an evenly spaced lattice.
///
/// Centers sit at `width·(i+1)/(cols+1)` and `height·(j+1)/(rows+1)`, which
/// for the default 50×50 arena gives {10, 20, 30, 40} on both axes.
pub fn build_world(config: &WorldConfig) -> Result<WorldMap> {
    if !(config.width > 0.0 && config.height > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "arena must have positive size, got {}x{}",
            config.width, config.height
        )));
    }
    if !(config.grid_resolution > 0.0) {
        return Err(Error::InvalidConfig("grid_resolution must be > 0".into()));
    }
    let n_pillars = config.pillar_rows * config.pillar_cols;
    if n_pillars > 0 && !(config.pillar_radius > 0.0) {
        return Err(Error::InvalidConfig("pillar_radius must be > 0".into()));
    }

    let mut pillars = Vec::with_capacity(n_pillars);
    for row in 0..config.pillar_rows {
        let y = config.height * (row + 1) as f64 / (config.pillar_rows + 1) as f64;
        for col in 0..config.pillar_cols {
            let x = config.width * (col + 1) as f64 / (config.pillar_cols + 1) as f64;
            pillars.push(Pillar {
                center: Point2::new(x, y),
                radius: config.pillar_radius,
            });
        }
    }
    WorldMap::new(config.width, config.height, pillars, config.grid_resolution)
}

impl WorldMap {
    pub fn new(width: f64, height: f64, pillars: Vec<Pillar>, grid_resolution: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && grid_resolution > 0.0) {
            return Err(Error::InvalidConfig(
                "width, height and grid_resolution must be positive".into(),
            ));
        }
        for p in &pillars {
            let c = p.center;
            if !(p.radius > 0.0) {
                return Err(Error::InvalidConfig("pillar radius must be > 0".into()));
            }
            if c.x - p.radius < 0.0
                || c.y - p.radius < 0.0
                || c.x + p.radius > width
                || c.y + p.radius > height
            {
                return Err(Error::InvalidConfig(format!(
                    "pillar at ({}, {}) radius {} crosses the arena boundary",
                    c.x, c.y, p.radius
                )));
            }
        }
        Ok(Self {
            width,
            height,
            pillars,
            grid_resolution,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn pillars(&self) -> &[Pillar] {
        &self.pillars
    }

    pub fn grid_resolution(&self) -> f64 {
        self.grid_resolution
    }

    pub fn in_bounds(&self, p: Point2, radius: f64) -> bool {
        p.x - radius >= 0.0
            && p.y - radius >= 0.0
            && p.x + radius <= self.width
            && p.y + radius <= self.height
    }

    /// True iff a disc of `robot_radius` at `p` is inside the arena and
    /// clear of every pillar.
    pub fn is_free(&self, p: Point2, robot_radius: f64) -> bool {
        self.in_bounds(p, robot_radius)
            && self.pillars.iter().all(|pl| {
                let r = pl.radius + robot_radius;
                p.distance_sq(pl.center) >= r * r
            })
    }

    /// Like [`is_free`](Self::is_free) but also clear of extra discs.
    pub fn is_free_with(&self, p: Point2, robot_radius: f64, discs: &[(Point2, f64)]) -> bool {
        self.is_free(p, robot_radius)
            && discs.iter().all(|&(c, r)| {
                let rr = r + robot_radius;
                p.distance_sq(c) >= rr * rr
            })
    }

    /// Distance from `p` to the nearest wall, pillar surface or disc surface
    /// (negative when inside one).
    pub fn clearance(&self, p: Point2, discs: &[(Point2, f64)]) -> f64 {
        let walls = p.x.min(p.y).min(self.width - p.x).min(self.height - p.y);
        self.pillars
            .iter()
            .map(|pl| (pl.center, pl.radius))
            .chain(discs.iter().copied())
            .map(|(c, r)| p.distance(c) - r)
            .fold(walls, f64::min)
    }

    /// Distance from `origin` along `angle` to the first pillar, wall or
    /// dynamic disc, clamped to `max_range`.
    pub fn raycast(
        &self,
        origin: Point2,
        angle: f64,
        max_range: f64,
        dynamic_discs: &[(Point2, f64)],
    ) -> f64 {
        let dir = Point2::new(angle.cos(), angle.sin());
        let mut best = max_range;
        if let Some(t) = self.wall_hit(origin, dir) {
            best = best.min(t);
        }
        for pl in &self.pillars {
            if let Some(t) = ray_circle(origin, dir, pl.center, pl.radius) {
                best = best.min(t);
            }
        }
        for &(c, r) in dynamic_discs {
            if let Some(t) = ray_circle(origin, dir, c, r) {
                best = best.min(t);
            }
        }
        best
    }

    fn wall_hit(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |t: f64| {
            if t > 0.0 && best.map_or(true, |b| t < b) {
                best = Some(t);
            }
        };
        if dir.x > 0.0 {
            consider((self.width - origin.x) / dir.x);
        } else if dir.x < 0.0 {
            consider(-origin.x / dir.x);
        }
        if dir.y > 0.0 {
            consider((self.height - origin.y) / dir.y);
        } else if dir.y < 0.0 {
            consider(-origin.y / dir.y);
        }
        best
    }
}
