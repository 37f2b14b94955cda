//! Renders trace records as SVG snapshots: pillars black, planned paths
//! dotted, conflict zones green while empty and red while occupied.

use crate::error::{Error, Result};
use crate::global_planner::RobotId;
use crate::simulation::{RobotStatus, TraceRecord};
use crate::world::WorldMap;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const SCALE: f64 = 12.0;

fn robot_color(status: RobotStatus) -> &'static str {
    match status {
        RobotStatus::Navigating => "#1f77b4",
        RobotStatus::Held => "#ff7f0e",
        RobotStatus::Replanning => "#9467bd",
        RobotStatus::Reached => "#2ca02c",
        RobotStatus::TimedOut => "#7f7f7f",
    }
}

/// One frame. `paths` holds the latest known path of each robot.
pub fn render_snapshot(
    map: &WorldMap,
    record: &TraceRecord,
    paths: &BTreeMap<RobotId, Vec<[f64; 2]>>,
    robot_radius: f64,
) -> String {
    let (w, h) = (map.width() * SCALE, map.height() * SCALE);
    let x = |v: f64| v * SCALE;
    let y = |v: f64| (map.height() - v) * SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{w}" height="{h}" fill="white" stroke="black" stroke-width="2"/>"#
    );
    for z in &record.zones {
        let [x0, y0, x1, y1] = z.bbox;
        let fill = if z.occupied { "#d62728" } else { "#2ca02c" };
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}" fill-opacity="0.3" stroke="{fill}"/>"#,
            x(x0),
            y(y1),
            (x1 - x0) * SCALE,
            (y1 - y0) * SCALE
        );
    }
    for p in map.pillars() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="black"/>"#,
            x(p.center.x),
            y(p.center.y),
            p.radius * SCALE
        );
    }
    for r in &record.robots {
        if r.status == RobotStatus::Reached {
            continue;
        }
        if let Some(path) = paths.get(&r.id) {
            let pts: Vec<String> = path
                .iter()
                .map(|[px, py]| format!("{:.1},{:.1}", x(*px), y(*py)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2" stroke-dasharray="2 5" stroke-linecap="round"/>"#,
                pts.join(" "),
                robot_color(r.status)
            );
        }
    }
    for r in &record.robots {
        let c = robot_color(r.status);
        let (cx, cy) = (x(r.x), y(r.y));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="{c}" fill-opacity="0.85" stroke="black"/>"#,
            robot_radius * SCALE
        );
        let tip = robot_radius * SCALE;
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{cy:.1}" x2="{:.1}" y2="{:.1}" stroke="white" stroke-width="2"/>"#,
            cx + tip * r.heading.cos(),
            cy - tip * r.heading.sin()
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            cy - tip - 3.0,
            r.id
        );
    }
    let _ = writeln!(s, r#"<text x="8" y="16">t = {:.1} s</text>"#, record.t);
    s.push_str("</svg>\n");
    s
}

/// Renders every `every`-th record (and the last), carrying paths forward
/// from the records where they were written.
pub fn render_trace(
    map: &WorldMap,
    records: &[TraceRecord],
    robot_radius: f64,
    every: usize,
) -> Vec<(usize, String)> {
    let every = every.max(1);
    let mut paths: BTreeMap<RobotId, Vec<[f64; 2]>> = BTreeMap::new();
    let mut frames = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        for r in &rec.robots {
            if let Some(p) = &r.path {
                paths.insert(r.id, p.clone());
            }
        }
        if k % every == 0 || k + 1 == records.len() {
            frames.push((k, render_snapshot(map, rec, &paths, robot_radius)));
        }
    }
    frames
}

/// Writes `step_NNNNN.svg` files into `dir`; returns how many.
pub fn write_replay(
    map: &WorldMap,
    records: &[TraceRecord],
    robot_radius: f64,
    every: usize,
    dir: &Path,
) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let frames = render_trace(map, records, robot_radius, every);
    for (k, svg) in &frames {
        let path = dir.join(format!("step_{k:05}.svg"));
        std::fs::write(&path, svg).map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(frames.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{TraceRobot, TraceZone};
    use crate::world::{build_world, WorldConfig};

    fn record(occupied: bool) -> TraceRecord {
        TraceRecord {
            t: 1.0,
            robots: vec![TraceRobot {
                id: 0,
                x: 5.0,
                y: 5.0,
                heading: 0.0,
                status: RobotStatus::Held,
                replans: 0,
                path: Some(vec![[5.0, 5.0], [25.0, 5.0]]),
            }],
            zones: vec![TraceZone {
                id: 3,
                bbox: [20.0, 20.0, 30.0, 30.0],
                occupied,
            }],
            cmds: vec![],
        }
    }

    #[test]
    fn zone_color_follows_occupancy() {
        let map = build_world(&WorldConfig::default()).unwrap();
        let empty = render_trace(&map, &[record(false)], 1.5, 1);
        let full = render_trace(&map, &[record(true)], 1.5, 1);
        assert!(empty[0].1.contains(r##"fill="#2ca02c" fill-opacity="0.3""##));
        assert!(full[0].1.contains(r##"fill="#d62728" fill-opacity="0.3""##));
        assert_eq!(empty[0].1.matches(r#"fill="black""#).count(), 16);
        assert!(empty[0].1.contains("stroke-dasharray"));
    }

    #[test]
    fn frame_selection_keeps_last() {
        let map = build_world(&WorldConfig::default()).unwrap();
        let recs = vec![record(false); 7];
        let frames = render_trace(&map, &recs, 1.5, 3);
        let idx: Vec<usize> = frames.iter().map(|f| f.0).collect();
        assert_eq!(idx, vec![0, 3, 6]);
    }
}
