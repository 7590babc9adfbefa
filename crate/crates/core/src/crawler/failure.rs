use serde::{Deserialize, Serialize};
use std::fmt;

use crate::engine::{self, EngineError, EngineProfile, MatchKind, ParsedResponse};

/// The four failure classes a query attempt can end in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", content = "status", rename_all = "kebab-case")]
pub enum FailureClass {
    TcpReset,
    HttpError(u16),
    HtmlSoftBlock,
    Timeout,
}

impl fmt::Display for FailureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureClass::TcpReset => f.write_str("TcpReset"),
            FailureClass::HttpError(s) => write!(f, "HttpError({s})"),
            FailureClass::HtmlSoftBlock => f.write_str("HtmlSoftBlock"),
            FailureClass::Timeout => f.write_str("Timeout"),
        }
    }
}

/// How a single transport attempt terminated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportOutcome {
    Response {
        status: u16,
        body: Vec<u8>,
    },
    /// Connection reset by peer, including mid-stream connection death.
    ResetByPeer,
    TimedOut,
    /// Could not connect at all.
    Unreachable(String),
}

/// Classifies a finished attempt: a cleanly parsed page, or one of the failure classes.
pub fn classify_exchange(
    profile: &EngineProfile,
    outcome: &TransportOutcome,
    page: u32,
) -> Result<ParsedResponse, FailureClass> {
    match outcome {
        TransportOutcome::ResetByPeer => Err(FailureClass::TcpReset),
        TransportOutcome::TimedOut | TransportOutcome::Unreachable(_) => Err(FailureClass::Timeout),
        TransportOutcome::Response { status, body } => {
            let status_sig = profile
                .robot_signatures
                .iter()
                .any(|s| s.kind == MatchKind::HttpStatus && s.needle.trim() == status.to_string());
            if *status != 200 || status_sig {
                return Err(FailureClass::HttpError(*status));
            }
            match engine::parse_response(profile, body, page) {
                Ok(parsed) => Ok(parsed),
                Err(EngineError::RobotBlockPage(_)) | Err(EngineError::UndecodableBody { .. }) => {
                    Err(FailureClass::HtmlSoftBlock)
                }
                Err(_) => Err(FailureClass::HtmlSoftBlock),
            }
        }
    }
}

/// The failure class of an attempt, or `None` when it produced a clean page.
pub fn classify_failure(
    profile: &EngineProfile,
    outcome: &TransportOutcome,
) -> Option<FailureClass> {
    classify_exchange(profile, outcome, 1).err()
}
