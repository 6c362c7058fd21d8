use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gne_core::harness::{
    check_scenario, export_episode, run_monte_carlo, run_scenario, EpisodeMetrics, HarnessError, MonteCarloOptions,
    ScenarioConfig,
};

/// Exit codes by failure category.
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_CHECK: u8 = 5;

#[derive(Parser)]
#[command(version, about = "Receding-horizon GNE planning for human-robot payload transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and export its trajectory.
    Run(Common),
    /// Run a Monte-Carlo batch and print the metrics table.
    Mc(Common),
    /// Certify every solve of an episode and check the execution invariants.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Preset name (scenario1, scenario2, scenario3) or TOML file.
    #[arg(long, default_value = "scenario1")]
    config: String,
    /// Comma-separated α values; defaults to the config's list (`run` uses
    /// the game's α).
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Monte-Carlo runs per α.
    #[arg(long)]
    runs: Option<usize>,
    /// Seed of a single run, or seed base of a batch.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for batches.
    #[arg(long)]
    threads: Option<usize>,
    /// Certificate tolerance for `check`.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

/// An error tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = if e.is_config() {
            EXIT_CONFIG
        } else if matches!(e, HarnessError::Io { .. }) {
            EXIT_IO
        } else {
            EXIT_SOLVER
        };
        Failure { code, error: e.into() }
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_IO,
        error: e.into(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(c) => run(&c),
        Command::Mc(c) => mc(&c),
        Command::Check(c) => check(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load(c: &Common) -> Result<ScenarioConfig, Failure> {
    let mut config = ScenarioConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        config.monte_carlo.seed_base = seed;
    }
    if let Some(out) = &c.out {
        config.output.dir = Some(out.clone());
    }
    Ok(config)
}

fn alphas(c: &Common, default: Vec<f64>) -> Vec<f64> {
    c.alpha.clone().unwrap_or(default)
}

fn run(c: &Common) -> Result<(), Failure> {
    let config = load(c)?;
    let seed = config.monte_carlo.seed_base;
    for alpha in alphas(c, vec![config.game.alpha]) {
        let log = run_scenario(&config, alpha, seed)?;
        let m = EpisodeMetrics::from_log(&log);
        println!(
            "{} alpha={alpha} seed={seed}: {} ticks, {:?}, success={}, mean_dist_dev={:.4} m, max_dist_dev={:.4} m, effort={:.3} m/s², infeasible ticks={}",
            config.name,
            log.ticks.len(),
            log.termination,
            m.success,
            m.mean_distance_dev,
            m.max_distance_dev,
            m.mean_effort,
            log.ticks.iter().filter(|t| t.infeasible).count()
        );
        if let Some(dir) = &config.output.dir {
            let stem = format!("{}_alpha{alpha}_seed{seed}", config.name);
            export_episode(&log, dir, &stem)?;
            println!("  wrote {}", dir.join(format!("{stem}.{{jsonl,csv}}")).display());
        }
    }
    Ok(())
}

fn mc(c: &Common) -> Result<(), Failure> {
    let config = load(c)?;
    let alphas = alphas(c, config.monte_carlo.alphas.clone());
    let runs = c.runs.unwrap_or(config.monte_carlo.runs);
    let options = MonteCarloOptions {
        threads: c.threads,
        export_dir: config.output.dir.as_ref().map(|d| d.join("runs")),
    };
    let report = run_monte_carlo(&config, &alphas, runs, &options)?;
    println!("{} (seed base {}, {runs} runs per alpha)", config.name, report.seed_base);
    print!("{}", report.to_table());
    if let Some(dir) = &config.output.dir {
        write_report(&report, dir).map_err(io_failure)?;
        println!("wrote {}", dir.join("metrics.{csv,json}").display());
    }
    Ok(())
}

fn write_report(report: &gne_core::harness::MetricsReport, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    report.write_csv(BufWriter::new(File::create(dir.join("metrics.csv"))?))?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("metrics.json"))?), report)?;
    Ok(())
}

fn check(c: &Common) -> Result<(), Failure> {
    let config = load(c)?;
    let seed = config.monte_carlo.seed_base;
    let mut failed = 0;
    for alpha in alphas(c, config.monte_carlo.alphas.clone()) {
        let r = check_scenario(&config, alpha, seed, c.tol)?;
        println!(
            "{} alpha={alpha}: {} ({} ticks, {} converged, {} certificate failures, worst residual {:.2e}, speed excess {:.1e}, accel excess {:.1e}, dynamics defect {:.1e})",
            config.name,
            if r.passed { "pass" } else { "FAIL" },
            r.ticks,
            r.converged_ticks,
            r.certificate_failures,
            r.worst_certificate,
            r.speed_excess,
            r.accel_excess,
            r.dynamics_defect
        );
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure {
            code: EXIT_CHECK,
            error: anyhow::anyhow!("{failed} check(s) failed"),
        });
    }
    Ok(())
}
