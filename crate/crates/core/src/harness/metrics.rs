use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::game::{payload_points, GameSpec};
use crate::sim::{EpisodeLog, Trajectory};

use super::HarnessError;

/// A payload point counts as inside an obstacle only when it is deeper than
/// this, m. Planned states sit exactly on the boundary when the clearance
/// constraint is active, and the solver tolerance leaves them a hair inside.
pub const INSIDE_DEPTH_TOL: f64 = 1e-5;

/// Per-episode statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// No payload sample point entered an obstacle at any executed state.
    pub success: bool,
    /// Time average of `| ‖x₁ − x₂‖ − d |` over executed states, m.
    pub mean_distance_dev: f64,
    pub max_distance_dev: f64,
    /// Time average of `‖a₂‖` over executed ticks, m/s².
    pub mean_effort: f64,
    pub ticks: usize,
}

impl EpisodeMetrics {
    pub fn from_trajectory(traj: &Trajectory, spec: &GameSpec) -> Self {
        let success = traj.states.iter().all(|s| {
            payload_points(s.x1, s.x2, spec.segment_divisions).iter().all(|p| {
                spec.obstacles
                    .iter()
                    .all(|o| (*p - o.center).norm() >= o.radius - INSIDE_DEPTH_TOL)
            })
        });
        let devs: Vec<f64> = traj
            .states
            .iter()
            .map(|s| (s.distance() - spec.payload_length).abs())
            .collect();
        let efforts: Vec<f64> = traj.robot_accels.iter().map(|a| a.norm()).collect();
        Self {
            success,
            mean_distance_dev: mean(&devs),
            max_distance_dev: devs.iter().copied().fold(0.0, f64::max),
            // An episode that ends before its first tick spends no effort.
            mean_effort: if efforts.is_empty() { 0.0 } else { mean(&efforts) },
            ticks: traj.robot_accels.len(),
        }
    }

    pub fn from_log(log: &EpisodeLog) -> Self {
        Self::from_trajectory(&log.trajectory(), &log.spec)
    }
}

/// Result of one Monte-Carlo run: its metrics, or why it could not finish.
pub type RunOutcome = Result<EpisodeMetrics, String>;

/// One row of the batch table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub alpha: f64,
    pub runs: usize,
    pub success_pct: f64,
    pub mean_distance_dev: f64,
    pub mean_max_distance_dev: f64,
    pub mean_effort: f64,
    /// Sample standard deviation of the per-run mean efforts; 0 for one run.
    pub std_effort: f64,
    /// Runs that ended in an error; counted as unsuccessful and left out of
    /// the distance and effort statistics.
    pub failed_runs: usize,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed_base: u64,
    pub rows: Vec<MetricsRow>,
}

/// Aggregates outcomes in the order given. Distance and effort statistics
/// are NaN when no run finished.
pub fn aggregate(alpha: f64, outcomes: &[RunOutcome], config_hash: Option<String>) -> MetricsRow {
    let done: Vec<&EpisodeMetrics> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let successes = done.iter().filter(|m| m.success).count();
    let efforts: Vec<f64> = done.iter().map(|m| m.mean_effort).collect();
    let mean_effort = mean(&efforts);
    let std_effort = match efforts.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => (efforts.iter().map(|e| (e - mean_effort).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt(),
    };
    MetricsRow {
        alpha,
        runs: outcomes.len(),
        success_pct: if outcomes.is_empty() {
            0.0
        } else {
            100.0 * successes as f64 / outcomes.len() as f64
        },
        mean_distance_dev: mean(&done.iter().map(|m| m.mean_distance_dev).collect::<Vec<_>>()),
        mean_max_distance_dev: mean(&done.iter().map(|m| m.max_distance_dev).collect::<Vec<_>>()),
        mean_effort,
        std_effort,
        failed_runs: outcomes.len() - done.len(),
        config_hash,
    }
}

/// Batch row computed from finished episode logs.
pub fn compute_metrics(logs: &[EpisodeLog], spec: &GameSpec) -> MetricsRow {
    let outcomes: Vec<RunOutcome> = logs
        .iter()
        .map(|l| Ok(EpisodeMetrics::from_trajectory(&l.trajectory(), spec)))
        .collect();
    let hash = logs.first().and_then(|l| l.config_hash.clone());
    let hash = hash.filter(|h| logs.iter().all(|l| l.config_hash.as_deref() == Some(h)));
    aggregate(spec.alpha, &outcomes, hash)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

impl MetricsReport {
    pub fn row(&self, alpha: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.alpha == alpha)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>6} {:>5} {:>9} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
            "alpha", "runs", "success%", "dist_dev", "max_dev", "effort", "std_eff", "failed"
        );
        for r in &self.rows {
            s += &format!(
                "{:>6} {:>5} {:>9.1} {:>10.4} {:>10.4} {:>10.3} {:>10.3} {:>6}\n",
                r.alpha,
                r.runs,
                r.success_pct,
                r.mean_distance_dev,
                r.mean_max_distance_dev,
                r.mean_effort,
                r.std_effort,
                r.failed_runs
            );
        }
        s
    }
}
