//! Client side of the wire protocol: one TCP connection per session.

use std::net::SocketAddr;

use proofbench_core::prover::{ProverResult, ProverStatus};
use tokio::io::BufReader;
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;

use crate::protocol::{read_message, write_message, Reply, Request, WireError};

pub struct Connection {
    read: BufReader<OwnedReadHalf>,
    write: OwnedWriteHalf,
    next_id: u64,
}

impl Connection {
    pub async fn connect(addr: SocketAddr) -> Result<Self, WireError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (read, write) = stream.into_split();
        Ok(Connection { read: BufReader::new(read), write, next_id: 1 })
    }

    async fn send(&mut self, build: impl FnOnce(u64) -> Request) -> Result<u64, WireError> {
        let id = self.next_id;
        self.next_id += 1;
        write_message(&mut self.write, &build(id)).await?;
        Ok(id)
    }

    async fn reply(&mut self, id: u64) -> Result<Reply, WireError> {
        let reply: Reply = read_message(&mut self.read).await?;
        if reply.id() != id {
            return Err(WireError::Malformed(format!("reply for request {} while waiting for {id}", reply.id())));
        }
        Ok(reply)
    }

    async fn expect_ok(&mut self, id: u64) -> Result<Option<String>, WireError> {
        match self.reply(id).await? {
            Reply::Ok { session_id, .. } => Ok(session_id),
            Reply::Error { message, .. } => Err(WireError::Malformed(format!("prover error: {message}"))),
            other => Err(WireError::Malformed(format!("unexpected reply {other:?}"))),
        }
    }

    pub async fn ping(&mut self) -> Result<(), WireError> {
        let id = self.send(|id| Request::Ping { id }).await?;
        self.expect_ok(id).await.map(drop)
    }

    pub async fn session_start(&mut self, parent: &str) -> Result<String, WireError> {
        let id = self.send(|id| Request::SessionStart { id, parent: parent.to_string() }).await?;
        self.expect_ok(id).await?.ok_or_else(|| WireError::Malformed("session_start reply without session_id".into()))
    }

    pub async fn session_stop(&mut self, session_id: &str) -> Result<(), WireError> {
        let id = self.send(|id| Request::SessionStop { id, session_id: session_id.to_string() }).await?;
        self.expect_ok(id).await.map(drop)
    }

    /// Submit a theory and collect notes until `finished`. A `finished`
    /// flag that disagrees with the collected messages is a protocol error.
    pub async fn use_theories(&mut self, session_id: &str, text: &str) -> Result<ProverResult, WireError> {
        let id = self
            .send(|id| Request::UseTheories { id, session_id: session_id.to_string(), theory_text: text.to_string() })
            .await?;
        let mut messages = Vec::new();
        let mut states = Vec::new();
        loop {
            match self.reply(id).await? {
                Reply::Note { message: Some(m), state: None, .. } => {
                    if !m.span.is_valid_in(text) {
                        return Err(WireError::Malformed(format!("span {:?} outside the theory", m.span)));
                    }
                    messages.push(m);
                }
                Reply::Note { message: None, state: Some(s), .. } => states.push(s),
                Reply::Finished { ok, .. } => {
                    let result = ProverResult::finished(messages, states);
                    if ok != (result.status == ProverStatus::FinishedOk) {
                        return Err(WireError::Malformed("finished flag contradicts messages".into()));
                    }
                    return Ok(result);
                }
                Reply::Error { message, .. } => return Err(WireError::Malformed(format!("prover error: {message}"))),
                other => return Err(WireError::Malformed(format!("unexpected reply {other:?}"))),
            }
        }
    }
}
