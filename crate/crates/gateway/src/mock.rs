//! Deterministic mock prover speaking the wire protocol.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use proofbench_core::prover::ProverResult;
use tokio::io::BufReader;
use tokio::net::{TcpListener, TcpStream};
use tokio::task::JoinHandle;

use crate::fixtures::FixtureSet;
use crate::protocol::{read_message, write_message, Reply, Request, WireError};
use crate::structural;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MockMode {
    /// Canned responses by theory hash; unknown hashes fall back to
    /// structural checking.
    Fixture,
    #[default]
    Structural,
}

impl std::str::FromStr for MockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixture" => Ok(MockMode::Fixture),
            "structural" => Ok(MockMode::Structural),
            other => Err(format!("unknown mock mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockConfig {
    pub mode: MockMode,
    pub fixtures: Arc<FixtureSet>,
    pub forbidden_methods: BTreeSet<String>,
    /// Stop answering after this many requests.
    pub fail_after: Option<u64>,
    /// Artificial delay before answering `use_theories`.
    pub latency: Duration,
}

impl MockConfig {
    pub fn structural() -> Self {
        MockConfig {
            forbidden_methods: ["auto", "simp", "blast"].into_iter().map(String::from).collect(),
            ..Default::default()
        }
    }

    pub fn fixture(fixtures: FixtureSet) -> Self {
        MockConfig { mode: MockMode::Fixture, fixtures: Arc::new(fixtures), ..Self::structural() }
    }

    pub fn check(&self, text: &str) -> ProverResult {
        if self.mode == MockMode::Fixture {
            if let Some(r) = self.fixtures.respond(text) {
                return r;
            }
            tracing::debug!("no fixture for theory, using structural check");
        }
        structural::check(text, &self.forbidden_methods)
    }
}

/// Runtime switches for scripted failures.
#[derive(Debug, Default)]
pub struct MockSwitch {
    silent: AtomicBool,
    answered: AtomicU64,
    checks: AtomicU64,
}

impl MockSwitch {
    /// A silent instance reads requests but never answers.
    pub fn set_silent(&self, silent: bool) {
        self.silent.store(silent, Ordering::SeqCst);
    }

    pub fn answered(&self) -> u64 {
        self.answered.load(Ordering::SeqCst)
    }

    pub fn checks(&self) -> u64 {
        self.checks.load(Ordering::SeqCst)
    }
}

struct Shared {
    config: MockConfig,
    switch: Arc<MockSwitch>,
    sessions: Mutex<HashMap<String, String>>,
    next_session: AtomicU64,
}

impl Shared {
    fn mute(&self) -> bool {
        self.switch.silent.load(Ordering::SeqCst)
            || self.config.fail_after.is_some_and(|n| self.switch.answered.load(Ordering::SeqCst) >= n)
    }
}

pub struct MockServer {
    addr: SocketAddr,
    switch: Arc<MockSwitch>,
    task: JoinHandle<()>,
}

impl MockServer {
    pub async fn bind(addr: SocketAddr, config: MockConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        Ok(Self::serve(listener, config))
    }

    pub fn serve(listener: TcpListener, config: MockConfig) -> Self {
        let addr = listener.local_addr().expect("bound listener has an address");
        let switch = Arc::new(MockSwitch::default());
        let shared = Arc::new(Shared {
            config,
            switch: switch.clone(),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        });
        let task = tokio::spawn(async move {
            loop {
                match listener.accept().await {
                    Ok((stream, _)) => {
                        let shared = shared.clone();
                        tokio::spawn(async move {
                            if let Err(e) = connection(stream, shared).await {
                                tracing::debug!("mock connection ended: {e}");
                            }
                        });
                    }
                    Err(e) => tracing::warn!("mock accept failed: {e}"),
                }
            }
        });
        MockServer { addr, switch, task }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn switch(&self) -> Arc<MockSwitch> {
        self.switch.clone()
    }

    pub fn stop(&self) {
        self.task.abort();
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn connection(stream: TcpStream, shared: Arc<Shared>) -> Result<(), WireError> {
    stream.set_nodelay(true)?;
    let (read, mut write) = stream.into_split();
    let mut read = BufReader::new(read);
    loop {
        let request: Request = match read_message(&mut read).await {
            Ok(r) => r,
            Err(WireError::Malformed(m)) => {
                if !shared.mute() {
                    write_message(&mut write, &Reply::Error { id: 0, message: format!("malformed request: {m}") })
                        .await?;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if shared.mute() {
            continue;
        }
        shared.switch.answered.fetch_add(1, Ordering::SeqCst);
        match request {
            Request::Ping { id } => write_message(&mut write, &Reply::Ok { id, session_id: None }).await?,
            Request::SessionStart { id, parent } => {
                let sid = format!("s{}", shared.next_session.fetch_add(1, Ordering::SeqCst));
                shared.sessions.lock().unwrap_or_else(|e| e.into_inner()).insert(sid.clone(), parent);
                write_message(&mut write, &Reply::Ok { id, session_id: Some(sid) }).await?;
            }
            Request::SessionStop { id, session_id } => {
                let known = shared.sessions.lock().unwrap_or_else(|e| e.into_inner()).remove(&session_id).is_some();
                let reply = if known {
                    Reply::Ok { id, session_id: Some(session_id) }
                } else {
                    Reply::Error { id, message: format!("unknown session {session_id}") }
                };
                write_message(&mut write, &reply).await?;
            }
            Request::UseTheories { id, session_id, theory_text } => {
                let known = shared.sessions.lock().unwrap_or_else(|e| e.into_inner()).contains_key(&session_id);
                if !known {
                    write_message(&mut write, &Reply::Error { id, message: format!("unknown session {session_id}") })
                        .await?;
                    continue;
                }
                shared.switch.checks.fetch_add(1, Ordering::SeqCst);
                if !shared.config.latency.is_zero() {
                    tokio::time::sleep(shared.config.latency).await;
                }
                let result = shared.config.check(&theory_text);
                for m in result.messages {
                    write_message(&mut write, &Reply::Note { id, message: Some(m), state: None }).await?;
                }
                for s in result.states {
                    write_message(&mut write, &Reply::Note { id, message: None, state: Some(s) }).await?;
                }
                let ok = result.status == proofbench_core::prover::ProverStatus::FinishedOk;
                write_message(&mut write, &Reply::Finished { id, ok }).await?;
            }
        }
    }
}
