//! Live steering: a person drives player 1 over a websocket while the robot
//! replans the game every tick.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, HelloConfig, HumanCommand, ServerMessage, PROTOCOL_VERSION};
pub use server::{serve, ServerOptions};
pub use session::{replay, Driver, Session, SessionDefaults, Transcript, TranscriptEvent, MISSING_INPUT_DECAY};

use gne_core::harness::HarnessError;
use gne_core::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SteerError {
    #[error("protocol: {0}")]
    Protocol(String),
    #[error(transparent)]
    Config(#[from] HarnessError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("websocket: {0}")]
    Socket(#[from] tungstenite::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
