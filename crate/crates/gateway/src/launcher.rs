//! Starting and stopping prover instances.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::Stdio;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};

use crate::mock::{MockConfig, MockMode, MockServer, MockSwitch};
use crate::GatewayError;

#[async_trait]
pub trait InstanceControl: Send + Sync {
    async fn stop(&mut self);
}

pub struct Launched {
    pub endpoint: SocketAddr,
    pub control: Box<dyn InstanceControl>,
}

#[async_trait]
pub trait Launcher: Send + Sync {
    /// Start instance `id`. The same id is launched again on restart.
    async fn launch(&self, id: usize) -> Result<Launched, GatewayError>;
}

struct InProcess(MockServer);

#[async_trait]
impl InstanceControl for InProcess {
    async fn stop(&mut self) {
        self.0.stop();
    }
}

/// Mock instances inside the current process, one listener each.
#[derive(Default)]
pub struct InProcessLauncher {
    config: MockConfig,
    switches: Mutex<HashMap<usize, Arc<MockSwitch>>>,
}

impl InProcessLauncher {
    pub fn new(config: MockConfig) -> Self {
        InProcessLauncher { config, switches: Mutex::new(HashMap::new()) }
    }

    /// Switch of the most recent launch of `id`.
    pub fn switch(&self, id: usize) -> Option<Arc<MockSwitch>> {
        self.switches.lock().unwrap_or_else(|e| e.into_inner()).get(&id).cloned()
    }
}

#[async_trait]
impl Launcher for InProcessLauncher {
    async fn launch(&self, id: usize) -> Result<Launched, GatewayError> {
        let server = MockServer::bind(([127, 0, 0, 1], 0).into(), self.config.clone())
            .await
            .map_err(|e| GatewayError::Launch { instance: id, reason: e.to_string() })?;
        self.switches.lock().unwrap_or_else(|e| e.into_inner()).insert(id, server.switch());
        Ok(Launched { endpoint: server.addr(), control: Box::new(InProcess(server)) })
    }
}

struct ChildProcess(Child);

#[async_trait]
impl InstanceControl for ChildProcess {
    async fn stop(&mut self) {
        let _ = self.0.kill().await;
    }
}

/// Separate `pb-mock-prover` processes. The binary prints
/// `listening <addr>` on its first stdout line.
pub struct ProcessLauncher {
    pub binary: PathBuf,
    pub mode: MockMode,
    pub fixtures: Option<PathBuf>,
}

#[async_trait]
impl Launcher for ProcessLauncher {
    async fn launch(&self, id: usize) -> Result<Launched, GatewayError> {
        let fail = |reason: String| GatewayError::Launch { instance: id, reason };
        let mut cmd = Command::new(&self.binary);
        cmd.args(["--port", "0", "--mode"])
            .arg(match self.mode {
                MockMode::Fixture => "fixture",
                MockMode::Structural => "structural",
            })
            .stdout(Stdio::piped())
            .stdin(Stdio::null())
            .kill_on_drop(true);
        if let Some(f) = &self.fixtures {
            cmd.arg("--fixtures").arg(f);
        }
        let mut child = cmd.spawn().map_err(|e| fail(format!("{}: {e}", self.binary.display())))?;
        let stdout = child.stdout.take().ok_or_else(|| fail("no stdout".into()))?;
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).await.map_err(|e| fail(e.to_string()))?;
        let endpoint = line
            .trim()
            .strip_prefix("listening ")
            .and_then(|a| a.parse().ok())
            .ok_or_else(|| fail(format!("unexpected banner {line:?}")))?;
        Ok(Launched { endpoint, control: Box::new(ChildProcess(child)) })
    }
}
