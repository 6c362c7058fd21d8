//! Wire messages. Every message is one JSON object with a `v` version field
//! and a `type` tag; the remaining fields depend on the type.

use gne_core::game::{GameSpec, Vec2};
use gne_core::harness::ScenarioConfig;
use gne_core::mcp::SolveStatus;
use serde::{Deserialize, Serialize};

use crate::SteerError;

pub const PROTOCOL_VERSION: u32 = 1;

/// Session source named in `hello`: a preset name or an inline scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HelloConfig {
    Preset(String),
    Inline(Box<ScenarioConfig>),
}

/// What the human asked for on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanCommand {
    /// A point to be pulled toward through the tracking law.
    TargetPos(Vec2),
    /// An acceleration, saturated to the human bounds.
    Accel(Vec2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<HelloConfig>,
    },
    HumanInput {
        /// Client clock, s; informational.
        t: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_pos: Option<Vec2>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        accel: Option<Vec2>,
    },
    SetAlpha {
        alpha: f64,
    },
    Pause,
    Resume,
    Reset,
}

impl ClientMessage {
    /// The human command carried by a `human_input`, if it names exactly one.
    pub fn human_command(&self) -> Option<Result<HumanCommand, SteerError>> {
        let ClientMessage::HumanInput { target_pos, accel, .. } = self else {
            return None;
        };
        Some(match (target_pos, accel) {
            (Some(p), None) if p.is_finite() => Ok(HumanCommand::TargetPos(*p)),
            (None, Some(a)) if a.is_finite() => Ok(HumanCommand::Accel(*a)),
            (Some(_), Some(_)) | (None, None) => Err(SteerError::Protocol(
                "human_input needs exactly one of target_pos and accel".into(),
            )),
            _ => Err(SteerError::Protocol("human_input values must be finite".into())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Sent once after `hello`: the game being played.
    Session {
        id: u64,
        scenario: String,
        spec: GameSpec,
    },
    State {
        tick: u64,
        t: f64,
        x1: Vec2,
        v1: Vec2,
        x2: Vec2,
        v2: Vec2,
        slack: f64,
        dist: f64,
    },
    Plan {
        tick: u64,
        robot_traj: Vec<Vec2>,
        human_pred_traj: Vec<Vec2>,
        status: SolveStatus,
        kkt_residual: f64,
        alpha: f64,
    },
    Flag {
        infeasible: bool,
        /// The solve took longer than one tick period.
        over_budget: bool,
    },
    Error {
        msg: String,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

/// Parses one inbound text frame.
pub fn decode_client(text: &str) -> Result<ClientMessage, SteerError> {
    #[derive(Deserialize)]
    struct Version {
        v: Option<u32>,
    }
    let version: Version = serde_json::from_str(text).map_err(|e| SteerError::Protocol(e.to_string()))?;
    match version.v {
        Some(PROTOCOL_VERSION) => {}
        Some(v) => return Err(SteerError::Protocol(format!("unsupported protocol version {v}"))),
        None => return Err(SteerError::Protocol("missing field `v`".into())),
    }
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| SteerError::Protocol(e.to_string()))?;
    let fields = value.as_object_mut().expect("checked above");
    fields.remove("v");
    // Field checks do not reach variants without fields; do it here.
    let bare = matches!(fields.get("type").and_then(|t| t.as_str()), Some("pause" | "resume" | "reset"));
    if bare {
        if let Some(extra) = fields.keys().find(|k| *k != "type") {
            return Err(SteerError::Protocol(format!("unknown field `{extra}`")));
        }
    }
    let msg: ClientMessage = serde_json::from_value(value).map_err(|e| SteerError::Protocol(e.to_string()))?;
    if let Some(Err(e)) = msg.human_command() {
        return Err(e);
    }
    if let ClientMessage::SetAlpha { alpha } = msg {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SteerError::Protocol(format!("alpha must lie in (0, 1), got {alpha}")));
        }
    }
    Ok(msg)
}

pub fn encode_client(msg: &ClientMessage) -> String {
    serde_json::to_string(&Envelope {
        v: PROTOCOL_VERSION,
        body: msg,
    })
    .expect("message serializes")
}

pub fn encode_server(msg: &ServerMessage) -> String {
    serde_json::to_string(&Envelope {
        v: PROTOCOL_VERSION,
        body: msg,
    })
    .expect("message serializes")
}

pub fn decode_server(text: &str) -> Result<ServerMessage, SteerError> {
    let env: Envelope<ServerMessage> = serde_json::from_str(text).map_err(|e| SteerError::Protocol(e.to_string()))?;
    if env.v != PROTOCOL_VERSION {
        return Err(SteerError::Protocol(format!("unsupported protocol version {}", env.v)));
    }
    Ok(env.body)
}
