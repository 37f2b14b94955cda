//! Batch experiments: the robot-count × mode sweep, per-cell aggregation with
//! 95% confidence intervals, and CSV / SVG / trace outputs.

mod config;
pub mod plot;
pub mod replay;

pub use config::{SweepConfig, CONFIG_KEYS};

use crate::error::{Error, Result};
use crate::simulation::trace::save_trace;
use crate::simulation::{run_trial_traced, Mode, TraceRecord, TrialResult};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

pub const SUMMARY_HEADER: &str = "mode,n_robots,trials,success_mean,success_ci,speed_mean,speed_ci,replans_mean,replans_ci,collisions_total";

pub const TRIALS_HEADER: &str = "mode,n_robots,trial,seed,success_rate,avg_speed,replans,robot_collisions,obstacle_collisions,commands_issued,max_zone_size,held_robots,steps,error";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i` in cell `(mode, n)`; depends on nothing else, so cells
/// reproduce independently of which other cells are run.
pub fn trial_seed(base_seed: u64, mode: Mode, n_robots: usize, trial: usize) -> u64 {
    let tag = match mode {
        Mode::Hybrid => 1,
        Mode::Decentralized => 2,
    };
    [tag, n_robots as u64, trial as u64]
        .into_iter()
        .fold(splitmix64(base_seed), |h, v| splitmix64(h ^ v))
}

/// One trial of the sweep: its result, or why it could not run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub mode: Mode,
    pub n_robots: usize,
    pub trial: usize,
    pub seed: u64,
    pub outcome: std::result::Result<TrialResult, String>,
}

/// The per-trial numbers that summaries are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub success_rate: f64,
    pub avg_speed: f64,
    pub replans: f64,
    pub collisions: u64,
}

impl From<&TrialResult> for TrialMetrics {
    fn from(r: &TrialResult) -> Self {
        Self {
            success_rate: r.success_rate(),
            avg_speed: r.avg_speed(),
            replans: r.total_replans() as f64,
            collisions: r.robot_collisions as u64 + r.obstacle_collisions as u64,
        }
    }
}

/// Mean and 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
}

impl Estimate {
    /// Normal approximation: mean ± 1.96·s/√n with the sample deviation;
    /// a single value has half-width 0.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        if values.iter().all(|v| *v == values[0]) {
            // exact, without the rounding residue of the mean
            return Some(Self {
                mean: values[0],
                ci: 0.0,
            });
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(Self {
            mean,
            ci: 1.96 * var.sqrt() / n.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub mode: Mode,
    pub n_robots: usize,
    pub trials: usize,
    pub success: Estimate,
    pub speed: Estimate,
    pub replans: Estimate,
    pub collisions_total: u64,
}

pub fn aggregate_metrics(mode: Mode, n_robots: usize, metrics: &[TrialMetrics]) -> Result<AggregateRow> {
    let col = |f: fn(&TrialMetrics) -> f64| {
        Estimate::of(&metrics.iter().map(f).collect::<Vec<_>>()).ok_or(Error::EmptyCell)
    };
    Ok(AggregateRow {
        mode,
        n_robots,
        trials: metrics.len(),
        success: col(|m| m.success_rate)?,
        speed: col(|m| m.avg_speed)?,
        replans: col(|m| m.replans)?,
        collisions_total: metrics.iter().map(|m| m.collisions).sum(),
    })
}

/// Aggregates one cell. All results must share mode and robot count.
pub fn aggregate(results: &[TrialResult]) -> Result<AggregateRow> {
    let first = results.first().ok_or(Error::EmptyCell)?;
    debug_assert!(results
        .iter()
        .all(|r| r.mode == first.mode && r.n_robots == first.n_robots));
    let metrics: Vec<TrialMetrics> = results.iter().map(TrialMetrics::from).collect();
    aggregate_metrics(first.mode, first.n_robots, &metrics)
}

pub struct Sweep {
    /// In canonical order: mode, robot count, trial index.
    pub trials: Vec<TrialRecord>,
    pub rows: Vec<AggregateRow>,
    /// `(file stem, records)` for the traced trials.
    pub traces: Vec<(String, Vec<TraceRecord>)>,
}

impl Sweep {
    /// True when every requested trial ran.
    pub fn complete(&self) -> bool {
        self.trials.iter().all(|t| t.outcome.is_ok())
    }
}

pub fn trace_stem(mode: Mode, n_robots: usize, trial: usize) -> String {
    format!("{mode}_n{n_robots:02}_t{trial:03}")
}

/// Runs every cell on `jobs` worker threads (0 = one per core). Results
/// come back in canonical order whatever the scheduling.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<Sweep> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &mode in &cfg.modes {
        for &n in &cfg.robot_counts {
            for i in 0..cfg.trials_per_cell {
                tasks.push((mode, n, i));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let outputs: Vec<(TrialRecord, Option<Vec<TraceRecord>>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(mode, n, i)| {
                let seed = trial_seed(cfg.base_seed, mode, n, i);
                let trial_cfg = crate::simulation::TrialConfig {
                    mode,
                    n_robots: n,
                    ..cfg.trial.clone()
                };
                let traced = i < cfg.traces_per_cell;
                let (outcome, trace) = match run_trial_traced(&trial_cfg, seed, traced) {
                    Ok((r, t)) => (Ok(r), t),
                    Err(e) => (Err(e.to_string()), None),
                };
                let record = TrialRecord {
                    mode,
                    n_robots: n,
                    trial: i,
                    seed,
                    outcome,
                };
                (record, trace)
            })
            .collect()
    });

    let mut trials = Vec::with_capacity(outputs.len());
    let mut traces = Vec::new();
    for (record, trace) in outputs {
        if let Some(t) = trace {
            traces.push((trace_stem(record.mode, record.n_robots, record.trial), t));
        }
        trials.push(record);
    }
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        for &n in &cfg.robot_counts {
            let results: Vec<TrialResult> = trials
                .iter()
                .filter(|t| t.mode == mode && t.n_robots == n)
                .filter_map(|t| t.outcome.as_ref().ok().cloned())
                .collect();
            // a cell whose every trial failed has no row; the failures are
            // still listed in trials.csv
            match aggregate(&results) {
                Ok(row) => rows.push(row),
                Err(Error::EmptyCell) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Sweep {
        trials,
        rows,
        traces,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.mode,
            r.n_robots,
            r.trials,
            r.success.mean,
            r.success.ci,
            r.speed.mean,
            r.speed.ci,
            r.replans.mean,
            r.replans.ci,
            r.collisions_total
        );
    }
    out
}

/// Floats are written in shortest round-trip form so summaries can be
/// rebuilt exactly from this file.
pub fn trials_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for t in trials {
        let _ = write!(out, "{},{},{},{},", t.mode, t.n_robots, t.trial, t.seed);
        match &t.outcome {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},",
                    r.success_rate(),
                    r.avg_speed(),
                    r.total_replans(),
                    r.robot_collisions,
                    r.obstacle_collisions,
                    r.commands_issued,
                    r.max_zone_size,
                    r.held_robots(),
                    r.steps
                );
            }
            Err(e) => {
                let _ = writeln!(out, ",,,,,,,,,{}", csv_field(e));
            }
        }
    }
    out
}

/// Rebuilds the summary rows from the text of a `trials.csv`.
pub fn rows_from_trials_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRIALS_HEADER) {
        return Err(Error::Parse("trials.csv header mismatch".into()));
    }
    let mut cells: Vec<((Mode, usize), Vec<TrialMetrics>)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let bad = || Error::Parse(format!("trials.csv line {}", k + 2));
        let f: Vec<&str> = line.splitn(14, ',').collect();
        if f.len() < 14 {
            return Err(bad());
        }
        let mode: Mode = f[0].parse().map_err(|_| bad())?;
        let n: usize = f[1].parse().map_err(|_| bad())?;
        let key = (mode, n);
        if cells.last().map(|c| c.0) != Some(key) {
            cells.push((key, Vec::new()));
        }
        if f[4].is_empty() {
            continue;
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad());
        cells.last_mut().expect("pushed above").1.push(TrialMetrics {
            success_rate: float(f[4])?,
            avg_speed: float(f[5])?,
            replans: float(f[6])?,
            collisions: int(f[7])? + int(f[8])?,
        });
    }
    cells
        .into_iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|((mode, n), m)| aggregate_metrics(mode, n, &m))
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes `summary.csv`, `trials.csv`, traces under `traces/`, and, when
/// `plots` is set, `success.svg`, `speed.svg` and `replans.svg`.
pub fn emit_outputs(sweep: &Sweep, out_dir: &Path, plots: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    write_file(&out_dir.join("summary.csv"), &summary_csv(&sweep.rows))?;
    write_file(&out_dir.join("trials.csv"), &trials_csv(&sweep.trials))?;
    if !sweep.traces.is_empty() {
        let dir = out_dir.join("traces");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        for (stem, records) in &sweep.traces {
            save_trace(records, &dir.join(format!("{stem}.ndjson")))?;
        }
    }
    if plots {
        for (name, title, pick) in plot::METRICS {
            let svg = plot::metric_plot(&sweep.rows, title, *pick);
            write_file(&out_dir.join(format!("{name}.svg")), &svg)?;
        }
    }
    Ok(())
}
