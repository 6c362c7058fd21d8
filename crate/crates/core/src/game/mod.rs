//! The two-player transport game: dynamics, private and shared constraints,
//! and costs over a decision vector with a fixed layout.

mod catalog;
mod layout;
mod model;
mod spec;
mod vec2;

pub use catalog::{ConstraintCatalog, ConstraintEntry, ConstraintKind};
pub use layout::{DecisionVector, Layout, PlayerPlan};
pub use model::{
    payload_points, step_dynamics, ConstraintGradients, ConstraintResiduals, GameModel, LocalDerivs,
};
pub use spec::{segment_coefficients, AgentParams, GameSpec, Obstacle, Player};
pub use vec2::Vec2;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[cfg(test)]
mod tests;
