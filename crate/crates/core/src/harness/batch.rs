use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::Player;
use crate::kkt::{certify_gne, CertificateReport};
use crate::mcp::SolveStatus;
use crate::sim::{run_episode, EpisodeLog, Simulator, StopCriteria, Termination};

use super::config::check_alphas;
use super::metrics::{aggregate, EpisodeMetrics, MetricsReport, RunOutcome};
use super::{HarnessError, ScenarioConfig};

/// Seed of run `i` in a batch.
pub fn run_seed(seed_base: u64, i: usize) -> u64 {
    seed_base ^ i as u64
}

/// Runs one episode of `config` at `alpha`; the log carries the config hash.
pub fn run_scenario(config: &ScenarioConfig, alpha: f64, seed: u64) -> Result<EpisodeLog, HarnessError> {
    check_alphas(&[alpha])?;
    let spec = config.spec_at(alpha);
    let mut log = run_episode(&spec, &config.strategy, &config.stop, seed, &config.solver)?;
    log.config_hash = Some(config.config_hash(alpha));
    Ok(log)
}

/// Writes `<stem>.jsonl` and `<stem>.csv` into `dir`.
pub fn export_episode(log: &EpisodeLog, dir: &Path, stem: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let jsonl = dir.join(format!("{stem}.jsonl"));
    log.write_jsonl(BufWriter::new(File::create(&jsonl).map_err(|e| io_error(&jsonl, e))?))?;
    export_csv(log, dir, stem)
}

fn export_csv(log: &EpisodeLog, dir: &Path, stem: &str) -> Result<(), HarnessError> {
    let csv = dir.join(format!("{stem}.csv"));
    log.write_csv(BufWriter::new(File::create(&csv).map_err(|e| io_error(&csv, e))?))?;
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// File stem of run `i` at `alpha` in a batch export.
pub fn run_stem(alpha: f64, i: usize) -> String {
    format!("alpha{alpha}_run{i:04}")
}

#[derive(Debug, Clone, Default)]
pub struct MonteCarloOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// When set, each run's CSV trajectory goes here (see [`run_stem`]).
    pub export_dir: Option<PathBuf>,
}

/// Runs `runs` seeded episodes for every `α` and tabulates them.
///
/// Run `i` uses seed [`run_seed`]`(seed_base, i)` at every `α`, so rows do
/// not depend on which other `α` values are in the batch. Runs execute in
/// parallel and are folded in (α, i) order afterwards, which makes the report
/// independent of the thread count. An episode that errors counts as an
/// unsuccessful run and does not abort the batch.
pub fn run_monte_carlo(
    config: &ScenarioConfig,
    alphas: &[f64],
    runs: usize,
    options: &MonteCarloOptions,
) -> Result<MetricsReport, HarnessError> {
    check_alphas(alphas)?;
    if runs == 0 {
        return Err(HarnessError::Config {
            field: "runs".into(),
            reason: "must be at least 1".into(),
        });
    }
    if let Some(dir) = &options.export_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let seed_base = config.monte_carlo.seed_base;
    let jobs: Vec<(f64, usize)> = alphas.iter().flat_map(|&a| (0..runs).map(move |i| (a, i))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config {
            field: "threads".into(),
            reason: e.to_string(),
        })?;
    let outcomes: Vec<Result<RunOutcome, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(alpha, i)| {
                let log = match run_scenario(config, alpha, run_seed(seed_base, i)) {
                    Ok(log) => log,
                    Err(HarnessError::Sim(e)) => return Ok(Err(e.to_string())),
                    Err(e) => return Err(e),
                };
                if let Some(dir) = &options.export_dir {
                    export_csv(&log, dir, &run_stem(alpha, i))?;
                }
                Ok(Ok(EpisodeMetrics::from_log(&log)))
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let rows = alphas
        .iter()
        .zip(outcomes.chunks(runs))
        .map(|(&alpha, chunk)| aggregate(alpha, chunk, Some(config.config_hash(alpha))))
        .collect();
    Ok(MetricsReport {
        scenario: config.name.clone(),
        seed_base,
        rows,
    })
}

/// Invariant and certificate checks over one closed-loop episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub alpha: f64,
    pub seed: u64,
    pub ticks: usize,
    pub converged_ticks: usize,
    pub certificate_failures: usize,
    /// Worst certificate residual over converged ticks.
    pub worst_certificate: f64,
    /// Largest `‖v‖ − v_max` and `‖a‖ − a_max` over executed ticks, both
    /// agents; positive values are violations.
    pub speed_excess: f64,
    pub accel_excess: f64,
    /// Largest mismatch between a logged state and the dynamics applied to
    /// its predecessor.
    pub dynamics_defect: f64,
    pub termination: Termination,
    pub passed: bool,
}

pub const SPEED_TOL: f64 = 1e-6;
pub const ACCEL_TOL: f64 = 1e-9;
pub const DYNAMICS_TOL: f64 = 1e-12;

/// Runs an episode of `config` at `alpha` and certifies every converged
/// solve with [`certify_gne`] at `tol`.
pub fn check_scenario(config: &ScenarioConfig, alpha: f64, seed: u64, tol: f64) -> Result<CheckReport, HarnessError> {
    check_alphas(&[alpha])?;
    let spec = config.spec_at(alpha);
    let stop: &StopCriteria = &config.stop;
    let mut sim = Simulator::new(spec.clone(), config.strategy.clone(), seed, config.solver.clone())?;
    let mut converged = 0;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..stop.max_ticks {
        if stop.reached(&spec, sim.state()) {
            break;
        }
        let state = *sim.state();
        sim.step(None)?;
        let plan = sim.last_plan().expect("a tick ran");
        if plan.status != SolveStatus::Converged {
            continue;
        }
        converged += 1;
        let model = crate::game::GameModel::new(state.as_initial(&spec))?;
        let cert: CertificateReport = certify_gne(&model, &plan.point, tol)?;
        worst = worst.max(cert.worst());
        if !cert.passed {
            failures += 1;
        }
    }
    let termination = if stop.reached(&spec, sim.state()) {
        Termination::ReachedTargets
    } else {
        Termination::MaxTicks
    };
    let log = sim.into_log(termination);
    let mut speed_excess = f64::NEG_INFINITY;
    let mut accel_excess = f64::NEG_INFINITY;
    for t in &log.ticks {
        for (p, a) in [(Player::Human, t.human_accel), (Player::Robot, t.robot_accel)] {
            accel_excess = accel_excess.max(a.norm() - spec.agent(p).a_max);
        }
    }
    for s in log.executed_states() {
        for p in Player::BOTH {
            speed_excess = speed_excess.max(s.vel(p).norm() - spec.agent(p).v_max);
        }
    }
    let states = log.executed_states();
    let dynamics_defect = log
        .ticks
        .iter()
        .zip(&states[1..])
        .map(|(t, next)| {
            let expect = t.state.advance(t.human_accel, t.robot_accel, spec.dt);
            [
                (expect.x1 - next.x1).norm(),
                (expect.v1 - next.v1).norm(),
                (expect.x2 - next.x2).norm(),
                (expect.v2 - next.v2).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(CheckReport {
        alpha,
        seed,
        ticks: log.ticks.len(),
        converged_ticks: converged,
        certificate_failures: failures,
        worst_certificate: worst,
        speed_excess,
        accel_excess,
        dynamics_defect,
        termination,
        passed: failures == 0 && speed_excess <= SPEED_TOL && accel_excess <= ACCEL_TOL && dynamics_defect <= DYNAMICS_TOL,
    })
}
