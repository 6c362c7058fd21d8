//! Receding-horizon planning for a human and a robot carrying a payload,
//! posed as a two-player generalized Nash equilibrium problem whose shared
//! constraint multipliers are split by a responsibility coefficient `α`.
//!
//! Layers, bottom up:
//! - [`mcp`]: semismooth Newton solver for mixed complementarity problems.
//! - [`game`]: dynamics, constraints and costs of the transport game.
//! - [`kkt`]: the joint KKT system as an MCP, plus equilibrium certificates.
//! - [`sim`]: closed-loop receding-horizon simulation.
//! - [`harness`]: scenario configs, Monte-Carlo batches and metrics.

pub mod game;
pub mod harness;
pub mod kkt;
pub mod mcp;
pub mod sim;
