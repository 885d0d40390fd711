//! Prover gateway: a pool of prover instances speaking a line-delimited
//! JSON protocol, plus a mock prover for tests and local runs.

pub mod connection;
pub mod fixtures;
pub mod launcher;
pub mod mock;
pub mod pool;
pub mod protocol;
pub mod structural;

pub use connection::Connection;
pub use fixtures::{theory_hash, FixtureSet};
pub use launcher::{InProcessLauncher, Launcher, ProcessLauncher};
pub use mock::{MockConfig, MockMode, MockServer};
pub use pool::{instances_for_roster, InstanceState, Pool, PoolConfig, PoolStatus, SessionHandle};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("instance {instance} failed to launch: {reason}")]
    Launch { instance: usize, reason: String },
    #[error("could not open a session on instance {instance}: {reason}")]
    SessionStart { instance: usize, reason: String },
    #[error("no healthy prover instance")]
    NoHealthyInstance,
    #[error("all prover instances are at their session cap")]
    AllAtCapacity,
    #[error("session handle is no longer valid")]
    InvalidHandle,
    #[error("cannot scale to {target}: allowed range is 1..={max}")]
    ScaleOutOfRange { target: usize, max: usize },
    #[error("invalid pool configuration: {0}")]
    Config(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}
