//! Episode records and their two export formats.
//!
//! Line-delimited JSON: a `header` record (schema version, strategy, α,
//! seed, config hash, game parameters), one `tick` record per tick, then an
//! `end` record with the final state and termination reason.
//!
//! CSV: one row per executed state. Columns are listed in [`CsvRow`]; the
//! last row holds the final state with empty command columns. Floats are
//! written in shortest round-trip form, so reading a file back reproduces the
//! logged values exactly.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::game::{GameSpec, Vec2};
use crate::mcp::SolveStatus;

use super::episode::Termination;
use super::human::HumanStrategy;
use super::planner::ActiveFlags;
use super::{JointState, SimError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: usize,
    /// State at the start of the tick.
    pub state: JointState,
    /// Applied accelerations after saturation.
    pub human_accel: Vec2,
    pub robot_accel: Vec2,
    /// First planned accelerations as returned by the solver.
    pub human_plan_accel: Vec2,
    pub robot_plan_accel: Vec2,
    /// Planned slack `s(1)`.
    pub slack: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual: f64,
    pub warm_started: bool,
    pub cold_retry: bool,
    pub infeasible: bool,
    pub active: ActiveFlags,
    pub alpha: f64,
    pub wall_time_ms: f64,
    pub human_plan: Vec<Vec2>,
    pub robot_plan: Vec<Vec2>,
    pub virtual_target: Option<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub schema_version: u32,
    pub strategy: HumanStrategy,
    pub alpha: f64,
    pub seed: u64,
    pub config_hash: Option<String>,
    pub spec: GameSpec,
    pub ticks: Vec<TickRecord>,
    pub final_state: JointState,
    pub termination: Termination,
}

/// Executed states and robot commands, the input of the episode metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Every executed state, including the final one.
    pub states: Vec<JointState>,
    pub robot_accels: Vec<Vec2>,
    pub slacks: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum JsonRecord {
    Header {
        schema_version: u32,
        strategy: HumanStrategy,
        alpha: f64,
        seed: u64,
        config_hash: Option<String>,
        spec: GameSpec,
    },
    Tick(Box<TickRecord>),
    End {
        final_state: JointState,
        termination: Termination,
    },
}

/// One CSV row.
#[derive(Debug, Serialize, Deserialize)]
pub struct CsvRow {
    pub tick: usize,
    pub t: f64,
    pub x1_x: f64,
    pub x1_y: f64,
    pub v1_x: f64,
    pub v1_y: f64,
    pub x2_x: f64,
    pub x2_y: f64,
    pub v2_x: f64,
    pub v2_y: f64,
    pub a1_x: Option<f64>,
    pub a1_y: Option<f64>,
    pub a2_x: Option<f64>,
    pub a2_y: Option<f64>,
    pub slack: Option<f64>,
    pub distance: f64,
    pub status: Option<SolveStatus>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub infeasible: Option<bool>,
}

impl EpisodeLog {
    pub fn executed_states(&self) -> Vec<JointState> {
        self.ticks.iter().map(|t| t.state).chain([self.final_state]).collect()
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            states: self.executed_states(),
            robot_accels: self.ticks.iter().map(|t| t.robot_accel).collect(),
            slacks: self.ticks.iter().map(|t| t.slack).collect(),
        }
    }

    /// Copy with wall-clock timings zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> EpisodeLog {
        let mut log = self.clone();
        for t in &mut log.ticks {
            t.wall_time_ms = 0.0;
        }
        log
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        let header = JsonRecord::Header {
            schema_version: self.schema_version,
            strategy: self.strategy.clone(),
            alpha: self.alpha,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            spec: self.spec.clone(),
        };
        let mut line = |rec: &JsonRecord| -> Result<(), SimError> {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        line(&header)?;
        for t in &self.ticks {
            line(&JsonRecord::Tick(Box::new(t.clone())))?;
        }
        line(&JsonRecord::End {
            final_state: self.final_state,
            termination: self.termination,
        })
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<EpisodeLog, SimError> {
        let mut header = None;
        let mut ticks = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line)? {
                JsonRecord::Header {
                    schema_version,
                    strategy,
                    alpha,
                    seed,
                    config_hash,
                    spec,
                } => {
                    if schema_version != SCHEMA_VERSION {
                        return Err(SimError::Format(format!("unsupported schema version {schema_version}")));
                    }
                    header = Some((schema_version, strategy, alpha, seed, config_hash, spec));
                }
                JsonRecord::Tick(t) => ticks.push(*t),
                JsonRecord::End {
                    final_state,
                    termination,
                } => {
                    let (schema_version, strategy, alpha, seed, config_hash, spec) =
                        header.ok_or_else(|| SimError::Format("missing header record".into()))?;
                    return Ok(EpisodeLog {
                        schema_version,
                        strategy,
                        alpha,
                        seed,
                        config_hash,
                        spec,
                        ticks,
                        final_state,
                        termination,
                    });
                }
            }
        }
        Err(SimError::Format("missing end record".into()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        let row = |s: &JointState, tick: usize| CsvRow {
            tick,
            t: s.t,
            x1_x: s.x1.x,
            x1_y: s.x1.y,
            v1_x: s.v1.x,
            v1_y: s.v1.y,
            x2_x: s.x2.x,
            x2_y: s.x2.y,
            v2_x: s.v2.x,
            v2_y: s.v2.y,
            a1_x: None,
            a1_y: None,
            a2_x: None,
            a2_y: None,
            slack: None,
            distance: s.distance(),
            status: None,
            iterations: None,
            residual: None,
            wall_time_ms: None,
            infeasible: None,
        };
        for t in &self.ticks {
            w.serialize(CsvRow {
                a1_x: Some(t.human_accel.x),
                a1_y: Some(t.human_accel.y),
                a2_x: Some(t.robot_accel.x),
                a2_y: Some(t.robot_accel.y),
                slack: Some(t.slack),
                status: Some(t.status),
                iterations: Some(t.iterations),
                residual: Some(t.residual),
                wall_time_ms: Some(t.wall_time_ms),
                infeasible: Some(t.infeasible),
                ..row(&t.state, t.tick)
            })?;
        }
        w.serialize(row(&self.final_state, self.ticks.len()))?;
        w.flush()?;
        Ok(())
    }
}

impl Trajectory {
    /// Reads the CSV export back.
    pub fn read_csv<R: Read>(input: R) -> Result<Trajectory, SimError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut traj = Trajectory {
            states: Vec::new(),
            robot_accels: Vec::new(),
            slacks: Vec::new(),
        };
        for row in reader.deserialize() {
            let r: CsvRow = row?;
            traj.states.push(JointState {
                t: r.t,
                x1: Vec2::new(r.x1_x, r.x1_y),
                v1: Vec2::new(r.v1_x, r.v1_y),
                x2: Vec2::new(r.x2_x, r.x2_y),
                v2: Vec2::new(r.v2_x, r.v2_y),
            });
            if let (Some(x), Some(y)) = (r.a2_x, r.a2_y) {
                traj.robot_accels.push(Vec2::new(x, y));
            }
            if let Some(s) = r.slack {
                traj.slacks.push(s);
            }
        }
        if traj.states.is_empty() {
            return Err(SimError::Format("empty trajectory".into()));
        }
        Ok(traj)
    }
}
