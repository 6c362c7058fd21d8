use serde::{Deserialize, Serialize};

use crate::game::{step_dynamics, GameSpec, Player, Vec2};

/// Positions and velocities of both agents at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub t: f64,
    pub x1: Vec2,
    pub v1: Vec2,
    pub x2: Vec2,
    pub v2: Vec2,
}

impl JointState {
    /// Initial state of `spec`, at `t = 0`.
    pub fn initial(spec: &GameSpec) -> Self {
        Self {
            t: 0.0,
            x1: spec.human.x0,
            v1: spec.human.v0,
            x2: spec.robot.x0,
            v2: spec.robot.v0,
        }
    }

    pub fn pos(&self, p: Player) -> Vec2 {
        match p {
            Player::Human => self.x1,
            Player::Robot => self.x2,
        }
    }

    pub fn vel(&self, p: Player) -> Vec2 {
        match p {
            Player::Human => self.v1,
            Player::Robot => self.v2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x1.is_finite() && self.v1.is_finite() && self.x2.is_finite() && self.v2.is_finite()
    }

    /// Distance between the two carried ends.
    pub fn distance(&self) -> f64 {
        (self.x1 - self.x2).norm()
    }

    /// State after applying `a1`, `a2` for one step of length `dt`.
    pub fn advance(&self, a1: Vec2, a2: Vec2, dt: f64) -> Self {
        let (x1, v1) = step_dynamics(self.x1, self.v1, a1, dt);
        let (x2, v2) = step_dynamics(self.x2, self.v2, a2, dt);
        Self {
            t: self.t + dt,
            x1,
            v1,
            x2,
            v2,
        }
    }

    /// Copy of `spec` whose initial conditions are this state.
    pub fn as_initial(&self, spec: &GameSpec) -> GameSpec {
        let mut s = spec.clone();
        s.human.x0 = self.x1;
        s.human.v0 = self.v1;
        s.robot.x0 = self.x2;
        s.robot.v0 = self.v2;
        s
    }
}

/// Clamps `a` to the acceleration ball, then shrinks it further if needed so
/// that the next velocity `v + dt·a` stays inside the speed ball. Both
/// operations are projections, so the result never exceeds `a_max`.
pub fn saturate_command(a: Vec2, v: Vec2, a_max: f64, v_max: f64, dt: f64) -> Vec2 {
    let a = a.clamp_norm(a_max);
    let next = v + dt * a;
    if next.norm() <= v_max {
        return a;
    }
    let projected = next.clamp_norm(v_max);
    ((projected - v) * (1.0 / dt)).clamp_norm(a_max)
}
