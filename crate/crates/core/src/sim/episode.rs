use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{GameError, GameSpec, Player, Vec2};
use crate::mcp::{SolveStatus, SolverOptions};

use super::human::{apply_noise, virtual_target_command, HumanStrategy, VirtualTarget};
use super::log::{EpisodeLog, TickRecord, SCHEMA_VERSION};
use super::planner::{plan_step, PlanStep};
use super::{saturate_command, JointState, SimError};

/// When an episode ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCriteria {
    /// Both agents within this distance of their targets, m.
    pub target_tolerance: f64,
    /// And both speeds at most this, m/s.
    pub speed_tolerance: f64,
    pub max_ticks: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            target_tolerance: 0.1,
            speed_tolerance: 0.1,
            max_ticks: 400,
        }
    }
}

impl StopCriteria {
    pub fn reached(&self, spec: &GameSpec, state: &JointState) -> bool {
        Player::BOTH.iter().all(|&p| {
            (state.pos(p) - spec.agent(p).target).norm() <= self.target_tolerance
                && state.vel(p).norm() <= self.speed_tolerance
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTargets,
    MaxTicks,
}

/// Stateful closed-loop simulation, advanced one tick at a time.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: GameSpec,
    strategy: HumanStrategy,
    options: SolverOptions,
    seed: u64,
    rng: ChaCha8Rng,
    state: JointState,
    target: Option<VirtualTarget>,
    warm: Option<Vec<f64>>,
    last_plan: Option<PlanStep>,
    ticks: Vec<TickRecord>,
}

impl Simulator {
    pub fn new(spec: GameSpec, strategy: HumanStrategy, seed: u64, options: SolverOptions) -> Result<Self, SimError> {
        spec.validate()?;
        options.validate()?;
        let target = match &strategy {
            HumanStrategy::VirtualTarget(params) => {
                params.validate()?;
                Some(VirtualTarget::new(spec.human.x0, spec.human.target, params.speed))
            }
            _ => None,
        };
        Ok(Self {
            state: JointState::initial(&spec),
            spec,
            strategy,
            options,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            target,
            warm: None,
            last_plan: None,
            ticks: Vec::new(),
        })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn state(&self) -> &JointState {
        &self.state
    }

    pub fn records(&self) -> &[TickRecord] {
        &self.ticks
    }

    pub fn last_plan(&self) -> Option<&PlanStep> {
        self.last_plan.as_ref()
    }

    /// Changes `α` for subsequent ticks.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), SimError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GameError::Invalid {
                field: "alpha".into(),
                reason: format!("must lie in (0, 1), got {alpha}"),
            }
            .into());
        }
        self.spec.alpha = alpha;
        Ok(())
    }

    /// Runs one tick. `external` is the human command and is required for
    /// [`HumanStrategy::External`]; it is ignored otherwise.
    pub fn step(&mut self, external: Option<Vec2>) -> Result<&TickRecord, SimError> {
        let tick = self.ticks.len();
        let spec = &self.spec;
        let plan = plan_step(spec, &self.state, self.warm.as_deref(), &self.options)?;
        let human = &spec.human;
        let raw_human = match &self.strategy {
            HumanStrategy::GnePlayer => plan.human_command,
            HumanStrategy::VirtualTarget(params) => {
                let vt = self.target.as_mut().expect("virtual target initialised");
                let cmd = virtual_target_command(self.state.x1, self.state.v1, vt, params, human.a_max);
                vt.advance(spec.dt);
                apply_noise(cmd, human.a_max, params.noise_fraction * human.a_max, &mut self.rng)
            }
            HumanStrategy::External => external.ok_or(SimError::MissingCommand { tick })?,
        };
        let a1 = saturate_command(raw_human, self.state.v1, human.a_max, human.v_max, spec.dt);
        let robot = &spec.robot;
        let a2 = saturate_command(plan.robot_command, self.state.v2, robot.a_max, robot.v_max, spec.dt);
        let next = self.state.advance(a1, a2, spec.dt);
        if !next.is_finite() {
            return Err(SimError::NonFinite { t: next.t });
        }
        let record = TickRecord {
            tick,
            state: self.state,
            human_accel: a1,
            robot_accel: a2,
            human_plan_accel: plan.human_command,
            robot_plan_accel: plan.robot_command,
            slack: plan.slack,
            status: plan.status,
            iterations: plan.iterations,
            residual: plan.residual,
            warm_started: plan.warm_started,
            cold_retry: plan.cold_retry,
            infeasible: plan.infeasible(),
            active: plan.active,
            alpha: spec.alpha,
            wall_time_ms: plan.wall_time.as_secs_f64() * 1e3,
            human_plan: plan.human_plan.clone(),
            robot_plan: plan.robot_plan.clone(),
            virtual_target: self.target.map(|vt| vt.position()),
        };
        self.warm = (plan.status == SolveStatus::Converged).then(|| plan.w.clone());
        self.last_plan = Some(plan);
        self.state = next;
        self.ticks.push(record);
        Ok(self.ticks.last().unwrap())
    }

    pub fn into_log(self, termination: Termination) -> EpisodeLog {
        EpisodeLog {
            schema_version: SCHEMA_VERSION,
            strategy: self.strategy,
            alpha: self.spec.alpha,
            seed: self.seed,
            config_hash: None,
            spec: self.spec,
            ticks: self.ticks,
            final_state: self.state,
            termination,
        }
    }
}

/// Runs a closed-loop episode until both agents rest at their targets or
/// `stop.max_ticks` ticks have run. The robot always plays the game.
pub fn run_episode(
    spec: &GameSpec,
    strategy: &HumanStrategy,
    stop: &StopCriteria,
    seed: u64,
    options: &SolverOptions,
) -> Result<EpisodeLog, SimError> {
    if matches!(strategy, HumanStrategy::External) {
        return Err(SimError::MissingCommand { tick: 0 });
    }
    let mut sim = Simulator::new(spec.clone(), strategy.clone(), seed, options.clone())?;
    for _ in 0..stop.max_ticks {
        if stop.reached(spec, sim.state()) {
            return Ok(sim.into_log(Termination::ReachedTargets));
        }
        sim.step(None)?;
    }
    let termination = if stop.reached(spec, sim.state()) {
        Termination::ReachedTargets
    } else {
        Termination::MaxTicks
    };
    Ok(sim.into_log(termination))
}
