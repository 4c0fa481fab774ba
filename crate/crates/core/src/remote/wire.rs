use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{Command, CommandKind, Observation};
use crate::wom::{Vec3, WorldModel};

pub const PROTOCOL_VERSION: u32 = 1;

pub mod notes {
    pub const PARSE_ERROR: &str = "ParseError";
    pub const ID_ORDER: &str = "IdOrder";
    pub const UNSUPPORTED_VERSION: &str = "UnsupportedVersion";
    pub const UNKNOWN_COMMAND: &str = "UnknownCommand";
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("missing argument `{0}`")]
    MissingArgument(&'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Args {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<String>,
}

/// `{"v":1,"id":N,"cmd":"OBSERVE"|"MOVETOWARD"|"INTERACT","agentId":..,"args":{..}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Request {
    pub v: u32,
    pub id: u64,
    pub cmd: String,
    pub agent_id: String,
    #[serde(default)]
    pub args: Args,
}

impl Request {
    pub fn from_command(id: u64, command: &Command) -> Self {
        let args = match &command.kind {
            CommandKind::Observe => Args::default(),
            CommandKind::MoveToward(t) => Args {
                target: Some(*t),
                ..Args::default()
            },
            CommandKind::Interact(e) => Args {
                entity_id: Some(e.clone()),
                ..Args::default()
            },
        };
        Self {
            v: PROTOCOL_VERSION,
            id,
            cmd: command.kind.wire_name().to_owned(),
            agent_id: command.agent_id.clone(),
            args,
        }
    }

    pub fn to_command(&self) -> Result<Command, WireError> {
        let kind = match self.cmd.as_str() {
            "OBSERVE" => CommandKind::Observe,
            "MOVETOWARD" => CommandKind::MoveToward(
                self.args
                    .target
                    .ok_or(WireError::MissingArgument("target"))?,
            ),
            "INTERACT" => CommandKind::Interact(
                self.args
                    .entity_id
                    .clone()
                    .ok_or(WireError::MissingArgument("entityId"))?,
            ),
            other => return Err(WireError::UnknownCommand(other.to_owned())),
        };
        Ok(Command::new(self.agent_id.clone(), kind))
    }
}

/// `{"v":1,"id":N,"ok":bool,"wom":{..},"note":".."}`; `wom` is omitted when
/// the request could not be executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub v: u32,
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wom: Option<WorldModel>,
    #[serde(default)]
    pub note: String,
}

impl Response {
    pub fn from_observation(id: u64, obs: Observation) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            id,
            ok: obs.success,
            wom: Some(obs.wom),
            note: obs.note,
        }
    }

    pub fn error(id: u64, note: &str) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            id,
            ok: false,
            wom: None,
            note: note.to_owned(),
        }
    }

    pub fn into_observation(self) -> Observation {
        Observation {
            wom: self.wom.unwrap_or_default(),
            success: self.ok,
            note: self.note,
        }
    }
}

/// Serializes a message as one line, including the trailing newline.
pub fn encode<T: Serialize>(message: &T) -> String {
    let mut line = serde_json::to_string(message).expect("wire messages serialize");
    line.push('\n');
    line
}

pub fn decode<'a, T: Deserialize<'a>>(line: &'a str) -> Result<T, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\n', '\r']))
}
