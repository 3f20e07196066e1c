//! One JSON object per line: `{"kind", "seq", "t", "payload"}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::TwinError;
use crate::arm::JointVector;
use crate::geometry::PoseRecord;
use crate::shape_display::LinkageState;

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Hello,
    StateUpdate { q: JointVector, linkage: LinkageState },
    TargetCommand { pose: PoseRecord, linkage: LinkageState },
    Heartbeat,
    Fault { code: u32, text: String },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Hello => "Hello",
            Payload::StateUpdate { .. } => "StateUpdate",
            Payload::TargetCommand { .. } => "TargetCommand",
            Payload::Heartbeat => "Heartbeat",
            Payload::Fault { .. } => "Fault",
        }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            Payload::StateUpdate { q, linkage } => q.0.iter().chain(&linkage.to_array()).copied().collect(),
            Payload::TargetCommand { pose, linkage } => pose
                .quat
                .iter()
                .chain(&pose.pos)
                .chain(&linkage.to_array())
                .copied()
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwinMessage {
    pub seq: u64,
    /// Send time on the simulated clock, s.
    pub t: f64,
    pub payload: Payload,
}

impl TwinMessage {
    pub fn new(seq: u64, t: f64, payload: Payload) -> Self {
        Self { seq, t, payload }
    }

    pub fn validate(&self) -> Result<(), TwinError> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(TwinError::MalformedMessage(format!("bad timestamp {}", self.t)));
        }
        if self.payload.numbers().iter().any(|v| !v.is_finite()) {
            return Err(TwinError::MalformedMessage("non-finite payload value".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StatePayload {
    q: JointVector,
    linkage: LinkageState,
}

#[derive(Serialize, Deserialize)]
struct TargetPayload {
    pose: PoseWire,
    linkage: LinkageState,
}

// PoseRecord rejects unknown fields; the wire form must tolerate them.
#[derive(Serialize, Deserialize)]
struct PoseWire {
    quat: [f64; 4],
    pos: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct FaultPayload {
    code: u32,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct Empty {}

#[derive(Serialize)]
struct Envelope<'a, P: Serialize> {
    kind: &'a str,
    seq: u64,
    t: f64,
    payload: P,
}

#[derive(Deserialize)]
struct RawEnvelope {
    kind: String,
    seq: u64,
    t: f64,
    payload: Value,
}

fn envelope<P: Serialize>(msg: &TwinMessage, payload: P) -> Result<String, TwinError> {
    serde_json::to_string(&Envelope {
        kind: msg.payload.kind(),
        seq: msg.seq,
        t: msg.t,
        payload,
    })
    .map_err(|e| TwinError::MalformedMessage(e.to_string()))
}

/// Serializes `msg` as a newline-terminated line.
pub fn encode(msg: &TwinMessage) -> Result<Vec<u8>, TwinError> {
    msg.validate()?;
    let mut line = match &msg.payload {
        Payload::Hello | Payload::Heartbeat => envelope(msg, Empty {}),
        Payload::StateUpdate { q, linkage } => envelope(
            msg,
            StatePayload {
                q: *q,
                linkage: *linkage,
            },
        ),
        Payload::TargetCommand { pose, linkage } => envelope(
            msg,
            TargetPayload {
                pose: PoseWire {
                    quat: pose.quat,
                    pos: pose.pos,
                },
                linkage: *linkage,
            },
        ),
        Payload::Fault { code, text } => envelope(
            msg,
            FaultPayload {
                code: *code,
                text: text.clone(),
            },
        ),
    }?
    .into_bytes();
    line.push(b'\n');
    Ok(line)
}

fn payload_as<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, TwinError> {
    serde_json::from_value(v).map_err(|e| TwinError::MalformedMessage(format!("payload: {e}")))
}

/// Parses one line (trailing newline optional). Unknown fields are ignored.
pub fn decode(line: &[u8]) -> Result<TwinMessage, TwinError> {
    let raw: RawEnvelope = serde_json::from_slice(line).map_err(|e| TwinError::MalformedMessage(e.to_string()))?;
    if !raw.payload.is_object() {
        return Err(TwinError::MalformedMessage("payload must be an object".into()));
    }
    let payload = match raw.kind.as_str() {
        "Hello" => Payload::Hello,
        "Heartbeat" => Payload::Heartbeat,
        "StateUpdate" => {
            let p: StatePayload = payload_as(raw.payload)?;
            Payload::StateUpdate {
                q: p.q,
                linkage: p.linkage,
            }
        }
        "TargetCommand" => {
            let p: TargetPayload = payload_as(raw.payload)?;
            Payload::TargetCommand {
                pose: PoseRecord {
                    quat: p.pose.quat,
                    pos: p.pose.pos,
                },
                linkage: p.linkage,
            }
        }
        "Fault" => {
            let p: FaultPayload = payload_as(raw.payload)?;
            Payload::Fault {
                code: p.code,
                text: p.text,
            }
        }
        other => return Err(TwinError::MalformedMessage(format!("unknown kind {other:?}"))),
    };
    let msg = TwinMessage {
        seq: raw.seq,
        t: raw.t,
        payload,
    };
    msg.validate()?;
    Ok(msg)
}
