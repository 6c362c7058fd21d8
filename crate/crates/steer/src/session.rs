use std::collections::VecDeque;
use std::time::Duration;

use gne_core::game::Vec2;
use gne_core::harness::ScenarioConfig;
use gne_core::mcp::SolveStatus;
use gne_core::sim::{virtual_target_command, HumanStrategy, JointState, Simulator, VirtualTarget, VirtualTargetParams};
use serde::{Deserialize, Serialize};

use crate::protocol::{decode_client, ClientMessage, HelloConfig, HumanCommand, ServerMessage, PROTOCOL_VERSION};
use crate::SteerError;

/// Share of the previous command held when a tick gets no input.
pub const MISSING_INPUT_DECAY: f64 = 0.5;

/// One live game: the authoritative state and everything needed to tick it.
#[derive(Debug)]
pub struct Session {
    id: u64,
    config: ScenarioConfig,
    tracking: VirtualTargetParams,
    sim: Simulator,
    paused: bool,
    tick: u64,
    last_command: Vec2,
    pending: Option<HumanCommand>,
}

impl Session {
    pub fn new(id: u64, config: ScenarioConfig, alpha: f64) -> Result<Self, SteerError> {
        let tracking = match &config.strategy {
            HumanStrategy::VirtualTarget(p) => p.clone(),
            _ => VirtualTargetParams::default(),
        };
        let sim = Self::simulator(&config, alpha)?;
        Ok(Self {
            id,
            config,
            tracking,
            sim,
            paused: false,
            tick: 0,
            last_command: Vec2::ZERO,
            pending: None,
        })
    }

    fn simulator(config: &ScenarioConfig, alpha: f64) -> Result<Simulator, SteerError> {
        let spec = config.spec_at(alpha);
        Ok(Simulator::new(spec, HumanStrategy::External, 0, config.solver.clone())?)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn state(&self) -> &JointState {
        self.sim.state()
    }

    pub fn alpha(&self) -> f64 {
        self.sim.spec().alpha
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    /// Ticks run so far; never reset.
    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn session_message(&self) -> ServerMessage {
        ServerMessage::Session {
            id: self.id,
            scenario: self.config.name.clone(),
            spec: self.sim.spec().clone(),
        }
    }

    pub fn state_message(&self) -> ServerMessage {
        let s = self.sim.state();
        ServerMessage::State {
            tick: self.tick,
            t: s.t,
            x1: s.x1,
            v1: s.v1,
            x2: s.x2,
            v2: s.v2,
            slack: self.sim.records().last().map_or(0.0, |r| r.slack),
            dist: s.distance(),
        }
    }

    /// Applies a control message. `hello` is handled by [`Driver`].
    pub fn apply(&mut self, msg: &ClientMessage) -> Result<(), SteerError> {
        match msg {
            ClientMessage::Hello { .. } => {}
            ClientMessage::HumanInput { .. } => {
                if let Some(cmd) = msg.human_command() {
                    self.pending = Some(cmd?);
                }
            }
            ClientMessage::SetAlpha { alpha } => self.sim.set_alpha(*alpha)?,
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
            ClientMessage::Reset => {
                self.sim = Self::simulator(&self.config, self.alpha())?;
                self.last_command = Vec2::ZERO;
                self.pending = None;
            }
        }
        Ok(())
    }

    /// Human acceleration for the coming tick.
    fn human_accel(&mut self) -> Vec2 {
        let s = *self.sim.state();
        match self.pending.take() {
            Some(HumanCommand::TargetPos(p)) => virtual_target_command(
                s.x1,
                s.v1,
                &VirtualTarget::stationary(p),
                &self.tracking,
                self.sim.spec().human.a_max,
            ),
            Some(HumanCommand::Accel(a)) => a,
            None => MISSING_INPUT_DECAY * self.last_command,
        }
    }

    /// Advances one tick: human command, robot replanning, both integrated.
    /// Emits `state` and `plan`, and `flag` when the solve did not converge
    /// or took longer than `budget`.
    pub fn tick(&mut self, budget: Option<Duration>) -> Result<Vec<ServerMessage>, SteerError> {
        let a1 = self.human_accel();
        let record = self.sim.step(Some(a1))?;
        self.last_command = record.human_accel;
        let infeasible = record.status != SolveStatus::Converged;
        let over_budget = budget.is_some_and(|b| record.wall_time_ms > b.as_secs_f64() * 1e3);
        let plan = ServerMessage::Plan {
            tick: self.tick + 1,
            robot_traj: record.robot_plan.clone(),
            human_pred_traj: record.human_plan.clone(),
            status: record.status,
            kkt_residual: record.residual,
            alpha: record.alpha,
        };
        self.tick += 1;
        let mut out = vec![self.state_message(), plan];
        if infeasible || over_budget {
            out.push(ServerMessage::Flag {
                infeasible,
                over_budget,
            });
        }
        Ok(out)
    }
}

/// Defaults for sessions whose `hello` names no config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDefaults {
    pub preset: String,
    pub alpha: f64,
}

/// Inbound messages applied at one tick boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub boundary: u64,
    pub message: ClientMessage,
}

/// Everything needed to replay a connection offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub v: u32,
    pub defaults: SessionDefaults,
    /// The human strategy draws no random numbers in a live session; kept for
    /// the record format.
    pub seed: u64,
    pub boundaries: u64,
    pub events: Vec<TranscriptEvent>,
}

/// Protocol state machine of one connection.
///
/// Inbound messages are queued and take effect at the next tick boundary,
/// in arrival order; the boundary then ticks the session unless it is
/// paused. The same driver runs live connections and offline replays.
#[derive(Debug)]
pub struct Driver {
    defaults: SessionDefaults,
    session: Option<Session>,
    next_id: u64,
    queue: VecDeque<ClientMessage>,
    boundary: u64,
    budget: Option<Duration>,
    transcript: Transcript,
}

impl Driver {
    pub fn new(defaults: SessionDefaults, budget: Option<Duration>) -> Self {
        Self {
            transcript: Transcript {
                v: PROTOCOL_VERSION,
                defaults: defaults.clone(),
                seed: 0,
                boundaries: 0,
                events: Vec::new(),
            },
            defaults,
            session: None,
            next_id: 1,
            queue: VecDeque::new(),
            boundary: 0,
            budget,
        }
    }

    pub fn set_budget(&mut self, budget: Option<Duration>) {
        self.budget = budget;
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Tick period of the current session, or of the default preset.
    pub fn period(&self) -> Duration {
        let dt = match &self.session {
            Some(s) => s.sim.spec().dt,
            None => ScenarioConfig::preset(&self.defaults.preset).map_or(0.1, |c| c.game.dt),
        };
        Duration::from_secs_f64(dt)
    }

    /// Parses and queues a text frame. Malformed frames are answered at once
    /// with an `error`, and not queued.
    pub fn receive(&mut self, text: &str) -> Option<ServerMessage> {
        match decode_client(text) {
            Ok(msg) => {
                self.queue.push_back(msg);
                None
            }
            Err(e) => Some(error(e)),
        }
    }

    pub fn enqueue(&mut self, msg: ClientMessage) {
        self.queue.push_back(msg);
    }

    /// Applies the queued messages, then ticks.
    pub fn boundary(&mut self) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        while let Some(msg) = self.queue.pop_front() {
            self.transcript.events.push(TranscriptEvent {
                boundary: self.boundary,
                message: msg.clone(),
            });
            if let Err(e) = self.apply(&msg, &mut out) {
                out.push(error(e));
            }
        }
        self.boundary += 1;
        self.transcript.boundaries = self.boundary;
        if let Some(s) = self.session.as_mut().filter(|s| !s.paused) {
            match s.tick(self.budget) {
                Ok(msgs) => out.extend(msgs),
                Err(e) => out.push(error(e)),
            }
        }
        out
    }

    fn apply(&mut self, msg: &ClientMessage, out: &mut Vec<ServerMessage>) -> Result<(), SteerError> {
        if let ClientMessage::Hello { config } = msg {
            let config = match config {
                None => ScenarioConfig::preset(&self.defaults.preset)?,
                Some(HelloConfig::Preset(name)) => ScenarioConfig::preset(name)?,
                Some(HelloConfig::Inline(c)) => {
                    c.validate()?;
                    (**c).clone()
                }
            };
            let alpha = self.session.as_ref().map_or(self.defaults.alpha, |s| s.alpha());
            let session = Session::new(self.next_id, config, alpha)?;
            self.next_id += 1;
            out.push(session.session_message());
            out.push(session.state_message());
            self.session = Some(session);
            return Ok(());
        }
        let session = self
            .session
            .as_mut()
            .ok_or_else(|| SteerError::Protocol("no session; send hello first".into()))?;
        session.apply(msg)?;
        if matches!(msg, ClientMessage::Reset) {
            out.push(session.state_message());
        }
        Ok(())
    }
}

fn error(e: SteerError) -> ServerMessage {
    ServerMessage::Error { msg: e.to_string() }
}

/// Runs a transcript through a fresh driver and returns every outbound
/// message in order.
pub fn replay(transcript: &Transcript) -> Vec<ServerMessage> {
    let mut driver = Driver::new(transcript.defaults.clone(), None);
    let mut events = transcript.events.iter().peekable();
    let mut out = Vec::new();
    for b in 0..transcript.boundaries {
        while let Some(e) = events.next_if(|e| e.boundary == b) {
            driver.enqueue(e.message.clone());
        }
        out.extend(driver.boundary());
    }
    out
}
