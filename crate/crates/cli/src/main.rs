use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use vtl_core::coordinator::service::CoordinatorService;
use vtl_core::coordinator::Coordinator;
use vtl_core::experiments::{emit_outputs, replay, run_sweep, SweepConfig};
use vtl_core::simulation::trace::{load_trace, save_trace};
use vtl_core::simulation::{run_trial_traced, Mode, TrialConfig};
use vtl_core::world::build_world;

/// Hybrid multi-robot coordination simulator.
#[derive(Parser)]
#[command(name = "vtl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode × robot-count sweep and write CSV summaries.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also write success.svg, speed.svg and replans.svg.
        #[arg(long)]
        plots: bool,
    },
    /// Run a single trial and print per-robot outcomes.
    Run {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        robots: usize,
        #[arg(long)]
        seed: u64,
        /// Write the step trace (NDJSON) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Parameter overrides in the sweep config format.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render a trace as SVG snapshots.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        /// Render every N-th step (the last step is always rendered).
        #[arg(long, default_value_t = 10)]
        every: usize,
        /// World parameters the trace was recorded with.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve the coordinator over NDJSON on stdin/stdout.
    Serve {
        /// Minimum time between ticks, seconds of pose time.
        #[arg(long, default_value_t = 0.1)]
        tick: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn trial_defaults(config: Option<&PathBuf>) -> Result<TrialConfig> {
    Ok(match config {
        Some(path) => SweepConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))?
            .trial,
        None => TrialConfig::default(),
    })
}

fn sweep(config: PathBuf, out: Option<PathBuf>, jobs: usize, plots: bool) -> Result<bool> {
    let mut cfg =
        SweepConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    cfg.plots |= plots;
    let started = std::time::Instant::now();
    let sweep = run_sweep(&cfg, jobs)?;
    emit_outputs(&sweep, &cfg.out_dir, cfg.plots)?;
    println!(
        "{:<14} {:>3} {:>6} {:>16} {:>16} {:>16} {:>5}",
        "mode", "n", "trials", "success", "speed", "replans", "coll"
    );
    for r in &sweep.rows {
        println!(
            "{:<14} {:>3} {:>6} {:>7.3} ± {:<6.3} {:>7.2} ± {:<6.2} {:>7.2} ± {:<6.2} {:>5}",
            r.mode.as_str(),
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
    let failed: Vec<_> = sweep.trials.iter().filter(|t| t.outcome.is_err()).collect();
    for t in &failed {
        if let Err(e) = &t.outcome {
            eprintln!("trial {} n={} #{} failed: {e}", t.mode, t.n_robots, t.trial);
        }
    }
    eprintln!(
        "{} trials in {:.1}s, results in {}",
        sweep.trials.len(),
        started.elapsed().as_secs_f64(),
        cfg.out_dir.display()
    );
    Ok(sweep.complete())
}

fn run(
    mode: Mode,
    robots: usize,
    seed: u64,
    trace: Option<PathBuf>,
    config: Option<PathBuf>,
) -> Result<()> {
    let cfg = TrialConfig {
        mode,
        n_robots: robots,
        ..trial_defaults(config.as_ref())?
    };
    let (result, records) = run_trial_traced(&cfg, seed, trace.is_some())?;
    println!("robot  success  speed   replans  time_to_goal  held");
    for r in &result.robots {
        let ttg = r
            .time_to_goal
            .map_or_else(|| "-".to_string(), |t| format!("{t:.1}"));
        println!(
            "{:>5}  {:>7}  {:>5.2}  {:>7}  {:>12}  {}",
            r.id, r.success, r.avg_speed, r.replans, ttg, r.ever_held
        );
    }
    println!(
        "success {:.3}  speed {:.2}  replans {}  robot collisions {}  obstacle collisions {}  commands {}  steps {}",
        result.success_rate(),
        result.avg_speed(),
        result.total_replans(),
        result.robot_collisions,
        result.obstacle_collisions,
        result.commands_issued,
        result.steps
    );
    if let (Some(path), Some(records)) = (trace, records) {
        save_trace(&records, &path)?;
        eprintln!("trace written to {}", path.display());
    }
    Ok(())
}

fn replay_cmd(trace: PathBuf, svg: PathBuf, every: usize, config: Option<PathBuf>) -> Result<()> {
    let cfg = trial_defaults(config.as_ref())?;
    let records = load_trace(&trace)?;
    if records.is_empty() {
        bail!("{} holds no records", trace.display());
    }
    let map = build_world(&cfg.world)?;
    let n = replay::write_replay(&map, &records, cfg.robot_radius, every, &svg)?;
    eprintln!("{n} snapshots written to {}", svg.display());
    Ok(())
}

fn serve(tick: f64, config: Option<PathBuf>) -> Result<()> {
    if !(tick > 0.0) {
        bail!("--tick must be positive");
    }
    let cfg = trial_defaults(config.as_ref())?;
    let mut service = CoordinatorService::new(Coordinator::new(cfg.coordinator), tick);
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stats = service.run(BufReader::new(stdin.lock()), BufWriter::new(stdout.lock()))?;
    eprintln!(
        "{} lines, {} rejected, {} commands",
        stats.lines, stats.rejected, stats.commands
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep {
            config,
            out,
            jobs,
            plots,
        } => sweep(config, out, jobs, plots),
        Command::Run {
            mode,
            robots,
            seed,
            trace,
            config,
        } => run(mode, robots, seed, trace, config).map(|_| true),
        Command::Replay {
            trace,
            svg,
            every,
            config,
        } => replay_cmd(trace, svg, every, config).map(|_| true),
        Command::Serve { tick, config } => serve(tick, config).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
