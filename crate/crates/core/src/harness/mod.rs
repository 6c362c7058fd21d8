//! Scenario files, single runs, Monte-Carlo batches and their metrics.

mod batch;
mod config;
mod metrics;

pub use batch::{
    check_scenario, export_episode, run_monte_carlo, run_scenario, run_seed, run_stem, CheckReport,
    MonteCarloOptions, ACCEL_TOL, DYNAMICS_TOL, SPEED_TOL,
};
pub use config::{MonteCarloSettings, OutputSettings, ScenarioConfig, PRESETS};
pub use metrics::{aggregate, compute_metrics, EpisodeMetrics, MetricsReport, MetricsRow, RunOutcome, INSIDE_DEPTH_TOL};

use std::path::PathBuf;

use thiserror::Error;

use crate::game::GameError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: invalid `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("unknown preset `{0}` (expected scenario1, scenario2 or scenario3)")]
    UnknownPreset(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<GameError> for HarnessError {
    fn from(e: GameError) -> Self {
        HarnessError::Sim(SimError::Game(e))
    }
}

impl HarnessError {
    /// Errors caused by the input rather than by the computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Parse(_)
                | HarnessError::Config { .. }
                | HarnessError::UnknownPreset(_)
                | HarnessError::Sim(SimError::Game(GameError::Invalid { .. }))
        )
    }
}
