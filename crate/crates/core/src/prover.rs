//! Prover outcome types shared by the gateway and feedback enrichment.

use serde::{Deserialize, Serialize};

use crate::syntax::{Severity, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverStatus {
    FinishedOk,
    FinishedFailed,
    ProtocolError,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageSeverity {
    Error,
    Warning,
    Information,
}

impl From<MessageSeverity> for Severity {
    fn from(s: MessageSeverity) -> Self {
        match s {
            MessageSeverity::Error => Severity::Error,
            MessageSeverity::Warning => Severity::Warning,
            MessageSeverity::Information => Severity::Info,
        }
    }
}

/// One prover message; `span` is a byte range in the submitted theory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverMessage {
    pub severity: MessageSeverity,
    pub span: SourceSpan,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofState {
    pub position: usize,
    pub text: String,
    pub subgoals: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverResult {
    pub status: ProverStatus,
    pub messages: Vec<ProverMessage>,
    pub states: Vec<ProofState>,
}

impl ProverResult {
    /// A finished check; the status follows from the presence of errors.
    pub fn finished(messages: Vec<ProverMessage>, states: Vec<ProofState>) -> Self {
        let status = if messages.iter().any(|m| m.severity == MessageSeverity::Error) {
            ProverStatus::FinishedFailed
        } else {
            ProverStatus::FinishedOk
        };
        ProverResult { status, messages, states }
    }

    pub fn aborted(status: ProverStatus, text: impl Into<String>) -> Self {
        ProverResult {
            status,
            messages: vec![ProverMessage {
                severity: MessageSeverity::Error,
                span: SourceSpan::empty(0),
                text: text.into(),
            }],
            states: Vec::new(),
        }
    }

    pub fn error_count(&self) -> usize {
        self.messages.iter().filter(|m| m.severity == MessageSeverity::Error).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_errors() {
        let warn = ProverMessage { severity: MessageSeverity::Warning, span: SourceSpan::empty(0), text: "w".into() };
        assert_eq!(ProverResult::finished(vec![warn.clone()], vec![]).status, ProverStatus::FinishedOk);
        let err = ProverMessage { severity: MessageSeverity::Error, ..warn };
        let r = ProverResult::finished(vec![err], vec![]);
        assert_eq!(r.status, ProverStatus::FinishedFailed);
        assert_eq!(r.error_count(), 1);
    }

    #[test]
    fn wire_names() {
        assert_eq!(serde_json::to_string(&ProverStatus::FinishedOk).unwrap(), "\"finished-ok\"");
        assert_eq!(serde_json::to_string(&MessageSeverity::Information).unwrap(), "\"information\"");
    }
}
