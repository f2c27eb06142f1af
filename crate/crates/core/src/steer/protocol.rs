//! Wire protocol: one JSON object per line, tagged by `type`.

use serde::{Deserialize, Serialize};

use crate::analysis::Energies;
use crate::engine::Command;
use crate::Vec3;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassPosition {
    pub id: usize,
    pub x: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub t: f64,
    pub n: u64,
    pub positions: Vec<MassPosition>,
    pub energies: Energies,
    /// Rolling springs/s over the last snapshot interval.
    pub throughput: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullState {
    pub t: f64,
    pub n: u64,
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub paused: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Message {
    Hello { version: u32 },
    Snapshot(Snapshot),
    Command { command: Command },
    Error { text: String },
    FullStateRequest,
    FullState(FullState),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("message has no `type` field")]
    MissingType,
    #[error("invalid {kind} message: {detail}")]
    Invalid { kind: String, detail: String },
    #[error("protocol version mismatch: server speaks version {server}, client sent version {client}")]
    VersionMismatch { server: u32, client: u32 },
}

/// Single line, newline-terminated.
pub fn encode(msg: &Message) -> String {
    let mut s = serde_json::to_string(msg).expect("messages always serialize");
    s.push('\n');
    s
}

pub fn decode(line: &str) -> Result<Message, ProtocolError> {
    let value: serde_json::Value =
        serde_json::from_str(line.trim_end()).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let kind = match value.get("type") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(_) => return Err(ProtocolError::Malformed("`type` must be a string".into())),
        None if value.is_object() => return Err(ProtocolError::MissingType),
        None => return Err(ProtocolError::Malformed("expected a JSON object".into())),
    };
    serde_json::from_value(value).map_err(|e| ProtocolError::Invalid {
        kind,
        detail: e.to_string(),
    })
}

/// Server-side gate on a client's hello.
pub fn check_version(client: u32) -> Result<(), ProtocolError> {
    if client == PROTOCOL_VERSION {
        Ok(())
    } else {
        Err(ProtocolError::VersionMismatch {
            server: PROTOCOL_VERSION,
            client,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Integrator;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        -1e6f64..1e6
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (finite(), finite(), finite()).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn snapshot_round_trips(
            t in 0.0f64..1e4,
            n in any::<u64>(),
            xs in proptest::collection::vec((0usize..1_000_000, vec3()), 0..20),
            e in (finite(), finite(), 0.0f64..1e6),
            throughput in 0.0f64..1e12,
        ) {
            let msg = Message::Snapshot(Snapshot {
                t,
                n,
                positions: xs.into_iter().map(|(id, x)| MassPosition { id, x }).collect(),
                energies: Energies::new(e.0, e.1, e.2),
                throughput,
            });
            let line = encode(&msg);
            prop_assert!(line.ends_with('\n') && !line[..line.len() - 1].contains('\n'));
            prop_assert_eq!(decode(&line).unwrap(), msg);
        }
    }

    #[test]
    fn every_message_round_trips() {
        let msgs = [
            Message::Hello { version: 1 },
            Message::Command {
                command: Command::ApplyForce {
                    masses: vec![1, 2],
                    force: Vec3::new(0.0, -1.5, 0.0),
                },
            },
            Message::Command {
                command: Command::SetIntegrator { name: Integrator::Rk4 },
            },
            Message::Error { text: "x".into() },
            Message::FullStateRequest,
            Message::FullState(FullState {
                t: 0.5,
                n: 5000,
                x: vec![Vec3::new(1.0, 2.0, 3.0)],
                v: vec![Vec3::zeros()],
                paused: true,
            }),
        ];
        for m in msgs {
            assert_eq!(decode(&encode(&m)).unwrap(), m);
        }
    }

    #[test]
    fn wire_format_is_readable() {
        let line = encode(&Message::Command {
            command: Command::SetDamping { value: 0.5 },
        });
        assert_eq!(line, "{\"type\":\"command\",\"command\":{\"kind\":\"set_damping\",\"value\":0.5}}\n");
        assert_eq!(encode(&Message::FullStateRequest), "{\"type\":\"full_state_request\"}\n");
    }

    #[test]
    fn missing_type_is_reported() {
        assert_eq!(decode("{\"version\": 1}"), Err(ProtocolError::MissingType));
        assert!(matches!(decode("not json"), Err(ProtocolError::Malformed(_))));
        assert!(matches!(decode("[1]"), Err(ProtocolError::Malformed(_))));
    }

    #[test]
    fn unknown_commands_rejected() {
        let err = decode("{\"type\":\"command\",\"command\":{\"kind\":\"explode\"}}").unwrap_err();
        assert!(matches!(err, ProtocolError::Invalid { ref kind, .. } if kind == "command"), "{err}");
        assert!(decode("{\"type\":\"teleport\"}").is_err());
    }

    #[test]
    fn version_gate_names_both_versions() {
        assert!(check_version(1).is_ok());
        let msg = check_version(2).unwrap_err().to_string();
        assert!(msg.contains("version 1") && msg.contains("version 2"), "{msg}");
    }
}
