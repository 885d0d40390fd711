//! Wire protocol between the gateway and a prover instance.
//!
//! TCP, one UTF-8 JSON object per line. Every request carries a
//! client-chosen `id` that the replies echo. `use_theories` is answered by
//! any number of `note` replies followed by exactly one `finished`; every
//! other request gets exactly one `ok` or `error`. See
//! `docs/prover-protocol.md`.

use proofbench_core::prover::{ProofState, ProverMessage};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWrite, AsyncWriteExt};

pub const DEFAULT_PARENT: &str = "Pure";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    Ping { id: u64 },
    SessionStart { id: u64, parent: String },
    UseTheories { id: u64, session_id: String, theory_text: String },
    SessionStop { id: u64, session_id: String },
}

impl Request {
    pub fn id(&self) -> u64 {
        match self {
            Request::Ping { id }
            | Request::SessionStart { id, .. }
            | Request::UseTheories { id, .. }
            | Request::SessionStop { id, .. } => *id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reply", rename_all = "snake_case")]
pub enum Reply {
    Ok {
        id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
    },
    Error {
        id: u64,
        message: String,
    },
    /// Exactly one of `message` and `state` is present.
    Note {
        id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        message: Option<ProverMessage>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<ProofState>,
    },
    Finished {
        id: u64,
        ok: bool,
    },
}

impl Reply {
    pub fn id(&self) -> u64 {
        match self {
            Reply::Ok { id, .. } | Reply::Error { id, .. } | Reply::Note { id, .. } | Reply::Finished { id, .. } => *id,
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("connection closed")]
    Closed,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub async fn write_message<W, T>(w: &mut W, message: &T) -> Result<(), WireError>
where
    W: AsyncWrite + Unpin,
    T: Serialize,
{
    let mut line = serde_json::to_vec(message).map_err(|e| WireError::Malformed(e.to_string()))?;
    line.push(b'\n');
    w.write_all(&line).await?;
    w.flush().await?;
    Ok(())
}

/// Read one line and decode it. Blank lines are skipped.
pub async fn read_message<R, T>(r: &mut R) -> Result<T, WireError>
where
    R: AsyncBufReadExt + Unpin,
    T: for<'de> Deserialize<'de>,
{
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line).await? == 0 {
            return Err(WireError::Closed);
        }
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if !trimmed.trim().is_empty() {
            return serde_json::from_str(trimmed).map_err(|e| WireError::Malformed(format!("{e}: {trimmed}")));
        }
    }
}
