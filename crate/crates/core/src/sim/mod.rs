//! Closed-loop receding-horizon execution of the game.

mod episode;
mod human;
mod log;
mod planner;
mod state;

pub use episode::{run_episode, Simulator, StopCriteria, Termination};
pub use human::{apply_noise, virtual_target_command, HumanStrategy, VirtualTarget, VirtualTargetParams};
pub use log::{CsvRow, EpisodeLog, TickRecord, Trajectory, SCHEMA_VERSION};
pub use planner::{plan_step, shift_warm_start, ActiveFlags, PlanStep};
pub use state::{saturate_command, JointState};

use thiserror::Error;

use crate::game::GameError;
use crate::mcp::McpError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solver(#[from] McpError),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("no human command supplied for tick {tick}")]
    MissingCommand { tick: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed log: {0}")]
    Format(String),
}
