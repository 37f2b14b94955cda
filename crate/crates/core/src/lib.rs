//! Hybrid multi-robot coordination.
//!
//! Robots plan their own paths (grid A* plus a DWA local controller) and a
//! central coordinator acts as a virtual traffic light: it watches announced
//! paths for conflicts and answers each robot near a conflict with STOP or
//! PROCEED. The [`simulation`] module runs both this hybrid scheme and a
//! purely decentralized baseline, and [`experiments`] sweeps them.

pub mod coordinator;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod global_planner;
pub mod local_planner;
pub mod simulation;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{Aabb, Point2, Pose2};
