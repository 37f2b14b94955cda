//! Self-contained SVG line plots: one polyline per mode over robot count,
//! with a shaded 95% band.

use super::{AggregateRow, Estimate};
use crate::simulation::Mode;
use std::fmt::Write as _;

pub type Pick = fn(&AggregateRow) -> Estimate;

/// `(file stem, title, metric)` for each plot.
pub const METRICS: &[(&str, &str, Pick)] = &[
    ("success", "Success rate", |r| r.success),
    ("speed", "Average speed (pixels/step x 100)", |r| r.speed),
    ("replans", "Replans per trial", |r| r.replans),
];

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn color(mode: Mode) -> &'static str {
    match mode {
        Mode::Hybrid => "#1f77b4",
        Mode::Decentralized => "#d62728",
    }
}

/// Tick step of roughly `span / 5` rounded to 1, 2 or 5 × 10^k.
fn nice_step(span: f64) -> f64 {
    let raw = (span / 5.0).max(1e-9);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    format!("{v:.decimals$}")
}

pub fn metric_plot(rows: &[AggregateRow], title: &str, pick: Pick) -> String {
    let mut modes: Vec<Mode> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    let xs = rows.iter().map(|r| r.n_robots as f64);
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x_min, x_max) = if rows.is_empty() {
        (0.0, 1.0)
    } else if x_min == x_max {
        (x_min - 1.0, x_max + 1.0)
    } else {
        (x_min, x_max)
    };
    let hi = rows
        .iter()
        .map(|r| {
            let e = pick(r);
            e.mean + e.ci
        })
        .fold(0.0_f64, f64::max);
    let lo = rows
        .iter()
        .map(|r| {
            let e = pick(r);
            e.mean - e.ci
        })
        .fold(0.0_f64, f64::min);
    let y_step = nice_step(hi - lo);
    let (y_min, y_max) = ((lo / y_step).floor() * y_step, ((hi / y_step).ceil() * y_step).max(y_step));

    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y_min) / (y_max - y_min) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        W / 2.0
    );

    // grid and ticks
    let mut y = y_min;
    while y <= y_max + y_step * 1e-6 {
        let yy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            yy + 4.0,
            fmt_tick(y, y_step)
        );
        y += y_step;
    }
    let mut counts: Vec<usize> = rows.iter().map(|r| r.n_robots).collect();
    counts.sort_unstable();
    counts.dedup();
    for n in &counts {
        let xx = px(*n as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="black"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 19.0
        );
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{LEFT},{TOP} {LEFT},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = H - BOTTOM,
        r = W - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Number of robots</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );

    for (k, mode) in modes.iter().enumerate() {
        let pts: Vec<(f64, Estimate)> = rows
            .iter()
            .filter(|r| r.mode == *mode)
            .map(|r| (r.n_robots as f64, pick(r)))
            .collect();
        let c = color(*mode);
        let upper = pts.iter().map(|(x, e)| format!("{:.2},{:.2}", px(*x), py(e.mean + e.ci)));
        let lower = pts.iter().rev().map(|(x, e)| format!("{:.2},{:.2}", px(*x), py(e.mean - e.ci)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{c}" fill-opacity="0.18" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|(x, e)| format!("{:.2},{:.2}", px(*x), py(e.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for (x, e) in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                px(*x),
                py(e.mean)
            );
        }
        let ly = TOP + 8.0 + 18.0 * k as f64;
        let lx = W - RIGHT - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{mode}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
