use serde::{Deserialize, Serialize};

use super::{GameError, Vec2};

/// One of the two players. The human is player 1, the robot player 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Human,
    Robot,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::Human, Player::Robot];

    pub fn index(self) -> usize {
        match self {
            Player::Human => 0,
            Player::Robot => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::Human => Player::Robot,
            Player::Robot => Player::Human,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParams {
    /// Speed bound, m/s.
    pub v_max: f64,
    /// Acceleration bound, m/s².
    pub a_max: f64,
    /// Initial position, m.
    pub x0: Vec2,
    /// Initial velocity, m/s.
    #[serde(default)]
    pub v0: Vec2,
    /// Target position, m.
    pub target: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

/// Complete description of one transport game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    /// Prediction horizon in steps.
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    /// Sampling period, s.
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    /// Nominal payload length, m.
    #[serde(default = "defaults::payload_length")]
    pub payload_length: f64,
    /// Half-width of the distance band, m.
    #[serde(default = "defaults::band_epsilon")]
    pub band_epsilon: f64,
    /// Number of subdivisions of the payload segment; `n + 1` points are checked.
    #[serde(default = "defaults::segment_divisions")]
    pub segment_divisions: usize,
    /// Weight of the acceleration penalty in both costs.
    #[serde(default = "defaults::effort_weight")]
    pub effort_weight: f64,
    /// Weight of the quadratic slack penalty in the robot cost.
    #[serde(default = "defaults::slack_weight")]
    pub slack_weight: f64,
    /// Share of the shared-constraint multiplier carried by the human.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    pub human: AgentParams,
    pub robot: AgentParams,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

pub(crate) mod defaults {
    pub fn horizon() -> usize {
        10
    }
    pub fn dt() -> f64 {
        0.1
    }
    pub fn payload_length() -> f64 {
        3.0
    }
    pub fn band_epsilon() -> f64 {
        0.05
    }
    pub fn segment_divisions() -> usize {
        6
    }
    pub fn effort_weight() -> f64 {
        0.1
    }
    pub fn slack_weight() -> f64 {
        1000.0
    }
    pub fn alpha() -> f64 {
        0.05
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> GameError {
    GameError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

impl AgentParams {
    fn validate(&self, who: &str) -> Result<(), GameError> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(invalid(format!("{who}.v_max"), format!("must be positive, got {}", self.v_max)));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(invalid(format!("{who}.a_max"), format!("must be positive, got {}", self.a_max)));
        }
        if !(self.x0.is_finite() && self.v0.is_finite() && self.target.is_finite()) {
            return Err(invalid(who, "positions and velocities must be finite"));
        }
        Ok(())
    }
}

impl GameSpec {
    /// Spec with the given agents, no obstacles and every other field at its
    /// default.
    pub fn with_agents(human: AgentParams, robot: AgentParams) -> Self {
        Self {
            horizon: defaults::horizon(),
            dt: defaults::dt(),
            payload_length: defaults::payload_length(),
            band_epsilon: defaults::band_epsilon(),
            segment_divisions: defaults::segment_divisions(),
            effort_weight: defaults::effort_weight(),
            slack_weight: defaults::slack_weight(),
            alpha: defaults::alpha(),
            human,
            robot,
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.band_epsilon > 0.0) {
            return Err(invalid("band_epsilon", "must be positive"));
        }
        if !(self.payload_length > self.band_epsilon && self.payload_length.is_finite()) {
            return Err(invalid("payload_length", "must exceed band_epsilon"));
        }
        if self.segment_divisions < 1 {
            return Err(invalid("segment_divisions", "must be at least 1"));
        }
        if !(self.effort_weight >= 0.0 && self.effort_weight.is_finite()) {
            return Err(invalid("effort_weight", "must be nonnegative"));
        }
        if !(self.slack_weight > 0.0 && self.slack_weight.is_finite()) {
            return Err(invalid("slack_weight", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        self.human.validate("human")?;
        self.robot.validate("robot")?;
        for o in &self.obstacles {
            if !(o.radius > 0.0 && o.radius.is_finite()) || !o.center.is_finite() {
                return Err(invalid("obstacles", format!("radius must be positive, got {}", o.radius)));
            }
        }
        Ok(())
    }

    pub fn agent(&self, p: Player) -> &AgentParams {
        match p {
            Player::Human => &self.human,
            Player::Robot => &self.robot,
        }
    }

    pub fn agent_mut(&mut self, p: Player) -> &mut AgentParams {
        match p {
            Player::Human => &mut self.human,
            Player::Robot => &mut self.robot,
        }
    }

    /// Interpolation coefficients `0, 1/n, …, 1` for the payload samples.
    pub fn segment_coefficients(&self) -> Vec<f64> {
        segment_coefficients(self.segment_divisions)
    }

    /// Weight of the shared multiplier carried by `p`: `α` or `1 − α`.
    pub fn shared_share(&self, p: Player) -> f64 {
        match p {
            Player::Human => self.alpha,
            Player::Robot => 1.0 - self.alpha,
        }
    }
}

pub fn segment_coefficients(divisions: usize) -> Vec<f64> {
    (0..=divisions).map(|q| q as f64 / divisions as f64).collect()
}
