//! The abstract environment through which an agent observes and controls a
//! system under test.
//!
//! Concrete environments live elsewhere: [`crate::sim::SimEnvironment`] runs
//! the bundled grid game in process and [`crate::remote::RemoteEnvironment`]
//! forwards commands over a socket. Failures are reported as failed
//! [`Observation`]s so that tactics can react to them.

use serde::{Deserialize, Serialize};

use crate::wom::{Vec3, WorldModel};

/// Notes carried by failed observations.
pub mod notes {
    pub const UNKNOWN_ENTITY: &str = "UnknownEntity";
    pub const OUT_OF_REACH: &str = "OutOfReach";
    pub const NO_PATH: &str = "NoPath";
    pub const INVALID_COMMAND: &str = "InvalidCommand";
    pub const SESSION_CLOSED: &str = "SessionClosed";
    pub const TIMEOUT: &str = "Timeout";
    pub const COMMAND_LIMIT: &str = "CommandLimit";
    pub const INVALID_OBSERVATION: &str = "InvalidObservation";
    pub const PROTOCOL_ERROR: &str = "ProtocolError";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CommandKind {
    Observe,
    MoveToward(Vec3),
    Interact(String),
}

impl CommandKind {
    pub fn wire_name(&self) -> &'static str {
        match self {
            CommandKind::Observe => "OBSERVE",
            CommandKind::MoveToward(_) => "MOVETOWARD",
            CommandKind::Interact(_) => "INTERACT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    pub agent_id: String,
}

impl Command {
    pub fn new(agent_id: impl Into<String>, kind: CommandKind) -> Self {
        Self {
            kind,
            agent_id: agent_id.into(),
        }
    }

    pub fn observe(agent_id: impl Into<String>) -> Self {
        Self::new(agent_id, CommandKind::Observe)
    }

    /// `MOVETOWARD` targets must be finite, `INTERACT` ids non-empty.
    pub fn is_well_formed(&self) -> bool {
        match &self.kind {
            CommandKind::Observe => true,
            CommandKind::MoveToward(t) => t.is_finite(),
            CommandKind::Interact(id) => !id.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub wom: WorldModel,
    pub success: bool,
    pub note: String,
}

impl Observation {
    pub fn ok(wom: WorldModel) -> Self {
        Self {
            wom,
            success: true,
            note: String::new(),
        }
    }

    pub fn failed(wom: WorldModel, note: impl Into<String>) -> Self {
        Self {
            wom,
            success: false,
            note: note.into(),
        }
    }

    /// The session with the system under test is gone (closed or timed out);
    /// the observation carries no usable view.
    pub fn is_session_failure(&self) -> bool {
        !self.success
            && matches!(
                self.note.as_str(),
                notes::SESSION_CLOSED | notes::TIMEOUT | notes::PROTOCOL_ERROR
            )
    }
}

/// Proxy to a system under test.
pub trait Environment: Send {
    fn execute(&mut self, command: &Command) -> Observation;
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn execute(&mut self, command: &Command) -> Observation {
        (**self).execute(command)
    }
}
