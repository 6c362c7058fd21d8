use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::game::{GameError, Vec2};

/// How the human's acceleration is chosen each tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HumanStrategy {
    /// The human applies its own first control of the joint game solution.
    GnePlayer,
    /// The human tracks a virtual target moving toward its goal, with noise.
    VirtualTarget(VirtualTargetParams),
    /// The command is supplied from outside on every tick.
    External,
}

impl HumanStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            HumanStrategy::GnePlayer => "gne_player",
            HumanStrategy::VirtualTarget(_) => "virtual_target",
            HumanStrategy::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirtualTargetParams {
    /// Speed of the virtual target along the straight start–goal line, m/s.
    pub speed: f64,
    pub kp: f64,
    pub kd: f64,
    /// Per-axis noise standard deviation as a fraction of the human `a_max`.
    pub noise_fraction: f64,
}

impl Default for VirtualTargetParams {
    fn default() -> Self {
        Self {
            speed: 1.2,
            kp: 4.0,
            kd: 4.0,
            noise_fraction: 0.2,
        }
    }
}

impl VirtualTargetParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let checks = [
            ("virtual_target.speed", self.speed, false),
            ("virtual_target.kp", self.kp, true),
            ("virtual_target.kd", self.kd, true),
            ("virtual_target.noise_fraction", self.noise_fraction, true),
        ];
        for (field, v, zero_ok) in checks {
            let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
            if !ok {
                return Err(GameError::Invalid {
                    field: field.into(),
                    reason: format!("must be {}, got {v}", if zero_ok { "nonnegative" } else { "positive" }),
                });
            }
        }
        Ok(())
    }
}

/// A point moving at constant speed from `start` to `goal`, then resting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualTarget {
    pub start: Vec2,
    pub goal: Vec2,
    pub speed: f64,
    /// Arc length travelled so far.
    pub travelled: f64,
}

impl VirtualTarget {
    pub fn new(start: Vec2, goal: Vec2, speed: f64) -> Self {
        Self {
            start,
            goal,
            speed,
            travelled: 0.0,
        }
    }

    /// A target resting at `at`.
    pub fn stationary(at: Vec2) -> Self {
        Self::new(at, at, 0.0)
    }

    fn length(&self) -> f64 {
        (self.goal - self.start).norm()
    }

    fn direction(&self) -> Vec2 {
        let len = self.length();
        if len > 0.0 {
            (self.goal - self.start) * (1.0 / len)
        } else {
            Vec2::ZERO
        }
    }

    pub fn position(&self) -> Vec2 {
        if self.travelled >= self.length() {
            self.goal
        } else {
            self.start + self.travelled * self.direction()
        }
    }

    pub fn velocity(&self) -> Vec2 {
        if self.travelled >= self.length() {
            Vec2::ZERO
        } else {
            self.speed * self.direction()
        }
    }

    pub fn advance(&mut self, dt: f64) {
        self.travelled = (self.travelled + self.speed * dt).min(self.length());
    }
}

/// PD tracking law `K_p(x_vt − x) + K_d(v_vt − v)`, clamped to `a_max`.
pub fn virtual_target_command(x: Vec2, v: Vec2, target: &VirtualTarget, params: &VirtualTargetParams, a_max: f64) -> Vec2 {
    let a = params.kp * (target.position() - x) + params.kd * (target.velocity() - v);
    a.clamp_norm(a_max)
}

/// Adds independent zero-mean Gaussian noise with standard deviation `std`
/// to each axis, then clamps to `a_max`.
pub fn apply_noise<R: Rng + ?Sized>(a: Vec2, a_max: f64, std: f64, rng: &mut R) -> Vec2 {
    if std == 0.0 {
        return a.clamp_norm(a_max);
    }
    let normal = Normal::new(0.0, std).expect("finite nonnegative std");
    let noise = Vec2::new(normal.sample(rng), normal.sample(rng));
    (a + noise).clamp_norm(a_max)
}
