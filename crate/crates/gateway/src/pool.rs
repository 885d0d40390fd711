//! Supervised pool of prover instances.
//!
//! Dispatch is least-sessions with the lowest instance id breaking ties.
//! Selection and the session-count increment happen under one lock.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use chrono::{DateTime, Utc};
use proofbench_core::prover::{ProverResult, ProverStatus};
use serde::{Deserialize, Serialize};
use tokio::time::timeout;

use crate::connection::Connection;
use crate::launcher::{InstanceControl, Launcher};
use crate::protocol::DEFAULT_PARENT;
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub initial: usize,
    pub max: usize,
    pub session_cap: usize,
    #[serde(with = "millis")]
    pub heartbeat_interval: Duration,
    /// Consecutive missed heartbeats before an instance is unhealthy.
    pub heartbeat_threshold: u32,
    /// Roster size served by one pair of instances.
    pub students_per_pair: usize,
    #[serde(with = "millis")]
    pub check_timeout: Duration,
    /// Consecutive check timeouts before an instance is unhealthy.
    pub timeout_threshold: u32,
    #[serde(with = "millis")]
    pub startup_timeout: Duration,
    pub parent: String,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            initial: 2,
            max: 30,
            session_cap: 25,
            heartbeat_interval: Duration::from_secs(5),
            heartbeat_threshold: 3,
            students_per_pair: 25,
            check_timeout: Duration::from_secs(30),
            timeout_threshold: 3,
            startup_timeout: Duration::from_secs(10),
            parent: DEFAULT_PARENT.into(),
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.initial < 1 || self.initial > self.max {
            return Err(GatewayError::Config(format!("need 1 ≤ initial ({}) ≤ max ({})", self.initial, self.max)));
        }
        if self.session_cap == 0 || self.students_per_pair == 0 || self.heartbeat_threshold == 0 {
            return Err(GatewayError::Config("session cap, students per pair and thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Instances for a roster: two per started group of `students_per_pair`,
    /// at least two, at most `max`.
    pub fn instances_for_roster(&self, roster: usize) -> usize {
        instances_for_roster(roster, self.students_per_pair, self.max)
    }
}

pub fn instances_for_roster(roster: usize, students_per_pair: usize, max: usize) -> usize {
    let pairs = roster.div_ceil(students_per_pair.max(1)).max(1);
    (2 * pairs).min(max).max(1)
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceState {
    Starting,
    Healthy,
    Unhealthy,
    Stopped,
}

struct Instance {
    id: usize,
    endpoint: Option<SocketAddr>,
    state: InstanceState,
    active: usize,
    acquisitions: u64,
    draining: bool,
    started_at: DateTime<Utc>,
    last_heartbeat: Option<DateTime<Utc>>,
    missed: u32,
    timeouts: u32,
    /// Bumped on every restart so stale handles do not touch the new counts.
    generation: u64,
    control: Option<Box<dyn InstanceControl>>,
}

impl Instance {
    fn stopped(id: usize, generation: u64) -> Self {
        Instance {
            id,
            endpoint: None,
            state: InstanceState::Stopped,
            active: 0,
            acquisitions: 0,
            draining: false,
            started_at: Utc::now(),
            last_heartbeat: None,
            missed: 0,
            timeouts: 0,
            generation,
            control: None,
        }
    }

    fn status(&self) -> InstanceStatus {
        InstanceStatus {
            id: self.id,
            endpoint: self.endpoint.map(|e| e.to_string()),
            state: self.state,
            draining: self.draining,
            active_sessions: self.active,
            acquisitions: self.acquisitions,
            started_at: self.started_at,
            last_heartbeat: self.last_heartbeat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceStatus {
    pub id: usize,
    pub endpoint: Option<String>,
    pub state: InstanceState,
    pub draining: bool,
    pub active_sessions: usize,
    /// Sessions ever opened on this launch of the instance.
    pub acquisitions: u64,
    pub started_at: DateTime<Utc>,
    pub last_heartbeat: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStatus {
    pub instances: Vec<InstanceStatus>,
    pub degraded: bool,
    pub max: usize,
    pub session_cap: usize,
}

impl PoolStatus {
    pub fn total_active(&self) -> usize {
        self.instances.iter().map(|i| i.active_sessions).sum()
    }

    pub fn healthy(&self) -> usize {
        self.instances.iter().filter(|i| i.state == InstanceState::Healthy).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub id: usize,
    pub before: InstanceState,
    pub after: InstanceState,
    pub restarted: bool,
    pub responded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub launched: Vec<usize>,
    pub stopped: Vec<usize>,
    pub draining: Vec<usize>,
    pub resumed: Vec<usize>,
}

/// A lease on one prover session. Release it with [`Pool::release`].
pub struct SessionHandle {
    pub session_id: String,
    pub instance_id: usize,
    pub parent: String,
    generation: u64,
    conn: tokio::sync::Mutex<Option<Connection>>,
    released: AtomicBool,
}

impl std::fmt::Debug for SessionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionHandle")
            .field("session_id", &self.session_id)
            .field("instance_id", &self.instance_id)
            .field("parent", &self.parent)
            .finish()
    }
}

impl SessionHandle {
    pub fn is_released(&self) -> bool {
        self.released.load(Ordering::SeqCst)
    }
}

pub struct Pool {
    config: PoolConfig,
    launcher: Arc<dyn Launcher>,
    instances: Mutex<Vec<Instance>>,
    /// Serializes sweeps and scaling; never held by acquire or release.
    admin: tokio::sync::Mutex<()>,
}

impl Pool {
    /// Launch `config.initial` instances and wait for each to answer a ping.
    /// Starts degraded if some fail; fails if none is healthy.
    pub async fn init(config: PoolConfig, launcher: Arc<dyn Launcher>) -> Result<Pool, GatewayError> {
        config.validate()?;
        let pool = Pool { config, launcher, instances: Mutex::new(Vec::new()), admin: tokio::sync::Mutex::new(()) };
        let launches = (0..pool.config.initial).map(|id| pool.start_instance(id, 0));
        let started = futures_join(launches).await;
        {
            let mut list = pool.lock();
            list.extend(started);
            list.sort_by_key(|i| i.id);
        }
        if pool.status().healthy() == 0 {
            return Err(GatewayError::NoHealthyInstance);
        }
        Ok(pool)
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, Vec<Instance>> {
        self.instances.lock().unwrap_or_else(|e| e.into_inner())
    }

    async fn start_instance(&self, id: usize, generation: u64) -> Instance {
        let mut inst = Instance::stopped(id, generation);
        match self.launcher.launch(id).await {
            Ok(launched) => {
                inst.endpoint = Some(launched.endpoint);
                inst.control = Some(launched.control);
                inst.state = InstanceState::Starting;
                match timeout(self.config.startup_timeout, ping(launched.endpoint)).await {
                    Ok(Ok(())) => {
                        inst.state = InstanceState::Healthy;
                        inst.last_heartbeat = Some(Utc::now());
                    }
                    _ => tracing::warn!(instance = id, "instance did not answer its first ping"),
                }
            }
            Err(e) => tracing::warn!(instance = id, "launch failed: {e}"),
        }
        inst
    }

    pub fn status(&self) -> PoolStatus {
        let list = self.lock();
        let instances: Vec<InstanceStatus> = list.iter().map(Instance::status).collect();
        let degraded = list.iter().any(|i| i.state != InstanceState::Healthy);
        PoolStatus { instances, degraded, max: self.config.max, session_cap: self.config.session_cap }
    }

    /// Open a session on the healthy, non-draining instance with the fewest
    /// active sessions.
    pub async fn acquire(&self) -> Result<SessionHandle, GatewayError> {
        let (id, endpoint, generation) = {
            let mut list = self.lock();
            let eligible = list.iter_mut().filter(|i| i.state == InstanceState::Healthy && !i.draining);
            let mut any = false;
            let best = eligible
                .inspect(|_| any = true)
                .filter(|i| i.active < self.config.session_cap)
                .min_by_key(|i| (i.active, i.id));
            match best {
                Some(inst) => {
                    inst.active += 1;
                    inst.acquisitions += 1;
                    (inst.id, inst.endpoint.expect("healthy instances have an endpoint"), inst.generation)
                }
                None if any => return Err(GatewayError::AllAtCapacity),
                None => return Err(GatewayError::NoHealthyInstance),
            }
        };
        let opened = timeout(self.config.startup_timeout, async {
            let mut conn = Connection::connect(endpoint).await?;
            let sid = conn.session_start(&self.config.parent).await?;
            Ok::<_, crate::protocol::WireError>((conn, sid))
        })
        .await;
        match opened {
            Ok(Ok((conn, session_id))) => Ok(SessionHandle {
                session_id,
                instance_id: id,
                parent: self.config.parent.clone(),
                generation,
                conn: tokio::sync::Mutex::new(Some(conn)),
                released: AtomicBool::new(false),
            }),
            failed => {
                let reason = match failed {
                    Ok(Err(e)) => e.to_string(),
                    _ => "session_start timed out".into(),
                };
                self.decrement(id, generation);
                self.stop_if_drained(id).await;
                Err(GatewayError::SessionStart { instance: id, reason })
            }
        }
    }

    /// Submit a theory on the handle's session. Protocol failures and
    /// timeouts come back as results with the matching status; the session
    /// is then torn down and the handle can only be released.
    pub async fn check_theory(
        &self,
        handle: &SessionHandle,
        text: &str,
        limit: Option<Duration>,
    ) -> Result<ProverResult, GatewayError> {
        if handle.is_released() {
            return Err(GatewayError::InvalidHandle);
        }
        let mut guard = handle.conn.lock().await;
        let conn = guard.as_mut().ok_or(GatewayError::InvalidHandle)?;
        let limit = limit.unwrap_or(self.config.check_timeout);
        match timeout(limit, conn.use_theories(&handle.session_id, text)).await {
            Ok(Ok(result)) => {
                self.with_instance(handle, |i| i.timeouts = 0);
                Ok(result)
            }
            Ok(Err(e)) => {
                *guard = None;
                tracing::warn!(instance = handle.instance_id, "protocol error: {e}");
                Ok(ProverResult::aborted(ProverStatus::ProtocolError, format!("prover protocol error: {e}")))
            }
            Err(_) => {
                *guard = None;
                let threshold = self.config.timeout_threshold;
                self.with_instance(handle, |i| {
                    i.timeouts += 1;
                    if i.timeouts >= threshold && i.state == InstanceState::Healthy {
                        tracing::warn!(instance = i.id, "marked unhealthy after {} timeouts", i.timeouts);
                        i.state = InstanceState::Unhealthy;
                    }
                });
                Ok(ProverResult::aborted(
                    ProverStatus::Timeout,
                    format!("the prover did not answer within {} ms", limit.as_millis()),
                ))
            }
        }
    }

    /// Return the lease. Releasing twice only logs a warning.
    pub async fn release(&self, handle: &SessionHandle) {
        if handle.released.swap(true, Ordering::SeqCst) {
            tracing::warn!(session = %handle.session_id, "session released twice");
            return;
        }
        let conn = handle.conn.lock().await.take();
        if let Some(mut conn) = conn {
            let sid = handle.session_id.clone();
            tokio::spawn(async move {
                let _ = timeout(Duration::from_secs(2), conn.session_stop(&sid)).await;
            });
        }
        self.decrement(handle.instance_id, handle.generation);
        self.stop_if_drained(handle.instance_id).await;
    }

    fn with_instance(&self, handle: &SessionHandle, f: impl FnOnce(&mut Instance)) {
        let mut list = self.lock();
        if let Some(i) = list.iter_mut().find(|i| i.id == handle.instance_id && i.generation == handle.generation) {
            f(i);
        }
    }

    fn decrement(&self, id: usize, generation: u64) {
        let mut list = self.lock();
        if let Some(i) = list.iter_mut().find(|i| i.id == id && i.generation == generation) {
            i.active = i.active.saturating_sub(1);
        }
    }

    async fn stop_if_drained(&self, id: usize) {
        let removed = {
            let mut list = self.lock();
            list.iter().position(|i| i.id == id && i.draining && i.active == 0).map(|pos| list.remove(pos))
        };
        if let Some(mut inst) = removed {
            if let Some(mut c) = inst.control.take() {
                c.stop().await;
            }
            tracing::info!(instance = id, "drained instance stopped");
        }
    }

    /// Restart instances found unhealthy or stopped by earlier sweeps, then
    /// ping every instance once.
    pub async fn health_sweep(&self) -> Vec<SweepOutcome> {
        let _admin = self.admin.lock().await;
        let snapshot: Vec<(usize, InstanceState, bool, Option<SocketAddr>, u64)> =
            self.lock().iter().map(|i| (i.id, i.state, i.draining, i.endpoint, i.generation)).collect();
        let mut outcomes = Vec::with_capacity(snapshot.len());
        for (id, before, draining, endpoint, generation) in snapshot {
            if matches!(before, InstanceState::Unhealthy | InstanceState::Stopped) && !draining {
                let old = {
                    let mut list = self.lock();
                    list.iter_mut().find(|i| i.id == id).and_then(|i| i.control.take())
                };
                if let Some(mut c) = old {
                    c.stop().await;
                }
                let fresh = self.start_instance(id, generation + 1).await;
                let after = fresh.state;
                if let Some(slot) = self.lock().iter_mut().find(|i| i.id == id) {
                    *slot = fresh;
                }
                outcomes.push(SweepOutcome {
                    id,
                    before,
                    after,
                    restarted: true,
                    responded: after == InstanceState::Healthy,
                });
                continue;
            }
            let responded = match endpoint {
                Some(ep) => matches!(timeout(self.config.heartbeat_interval, ping(ep)).await, Ok(Ok(()))),
                None => false,
            };
            let threshold = self.config.heartbeat_threshold;
            let after = {
                let mut list = self.lock();
                let Some(i) = list.iter_mut().find(|i| i.id == id && i.generation == generation) else { continue };
                if responded {
                    i.missed = 0;
                    i.last_heartbeat = Some(Utc::now());
                    if matches!(i.state, InstanceState::Starting | InstanceState::Unhealthy) {
                        i.state = InstanceState::Healthy;
                    }
                } else {
                    i.missed += 1;
                    if i.missed >= threshold && i.state != InstanceState::Stopped {
                        i.state = InstanceState::Unhealthy;
                    }
                }
                i.state
            };
            outcomes.push(SweepOutcome { id, before, after, restarted: false, responded });
        }
        outcomes
    }

    /// Grow or shrink to `target` serving instances. Shrinking removes the
    /// highest ids: idle ones stop at once, busy ones drain.
    pub async fn scale(&self, target: usize) -> Result<ScaleReport, GatewayError> {
        if target < 1 || target > self.config.max {
            return Err(GatewayError::ScaleOutOfRange { target, max: self.config.max });
        }
        let _admin = self.admin.lock().await;
        let mut report = ScaleReport::default();
        let mut to_stop = Vec::new();
        let mut to_launch = Vec::new();
        {
            let mut list = self.lock();
            let serving = list.iter().filter(|i| !i.draining).count();
            if target > serving {
                let mut need = target - serving;
                for i in list.iter_mut().filter(|i| i.draining) {
                    if need == 0 {
                        break;
                    }
                    i.draining = false;
                    report.resumed.push(i.id);
                    need -= 1;
                }
                let mut next = 0;
                while need > 0 {
                    if !list.iter().any(|i| i.id == next) && !to_launch.contains(&next) {
                        to_launch.push(next);
                        need -= 1;
                    }
                    next += 1;
                }
            } else if target < serving {
                let mut ids: Vec<usize> = list.iter().filter(|i| !i.draining).map(|i| i.id).collect();
                ids.sort_unstable_by(|a, b| b.cmp(a));
                for id in ids.into_iter().take(serving - target) {
                    let pos = list.iter().position(|i| i.id == id).expect("id taken from the list");
                    if list[pos].active == 0 {
                        to_stop.push(list.remove(pos));
                        report.stopped.push(id);
                    } else {
                        list[pos].draining = true;
                        report.draining.push(id);
                    }
                }
            }
        }
        for mut inst in to_stop {
            if let Some(mut c) = inst.control.take() {
                c.stop().await;
            }
        }
        let started = futures_join(to_launch.iter().map(|&id| self.start_instance(id, 0))).await;
        {
            let mut list = self.lock();
            for inst in started {
                report.launched.push(inst.id);
                list.push(inst);
            }
            list.sort_by_key(|i| i.id);
        }
        report.stopped.sort_unstable();
        report.draining.sort_unstable();
        Ok(report)
    }

    /// Stop every instance.
    pub async fn shutdown(&self) {
        let all: Vec<Instance> = std::mem::take(&mut *self.lock());
        for mut inst in all {
            if let Some(mut c) = inst.control.take() {
                c.stop().await;
            }
        }
    }
}

async fn ping(endpoint: SocketAddr) -> Result<(), crate::protocol::WireError> {
    Connection::connect(endpoint).await?.ping().await
}

/// Run futures concurrently on the current task and collect their outputs in order.
async fn futures_join<F: std::future::Future>(futures: impl IntoIterator<Item = F>) -> Vec<F::Output> {
    let mut set: Vec<std::pin::Pin<Box<F>>> = futures.into_iter().map(Box::pin).collect();
    let mut out: Vec<Option<F::Output>> = (0..set.len()).map(|_| None).collect();
    std::future::poll_fn(|cx| {
        let mut pending = false;
        for (slot, fut) in out.iter_mut().zip(set.iter_mut()) {
            if slot.is_none() {
                match fut.as_mut().poll(cx) {
                    std::task::Poll::Ready(v) => *slot = Some(v),
                    std::task::Poll::Pending => pending = true,
                }
            }
        }
        if pending {
            std::task::Poll::Pending
        } else {
            std::task::Poll::Ready(())
        }
    })
    .await;
    out.into_iter().map(|v| v.expect("every future completed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_rule() {
        let c = PoolConfig::default();
        assert_eq!(c.instances_for_roster(0), 2);
        assert_eq!(c.instances_for_roster(25), 2);
        assert_eq!(c.instances_for_roster(26), 4);
        assert_eq!(c.instances_for_roster(50), 4);
        assert_eq!(c.instances_for_roster(51), 6);
        assert_eq!(c.instances_for_roster(10_000), 30);
    }

    #[test]
    fn config_bounds() {
        assert!(PoolConfig::default().validate().is_ok());
        assert!(PoolConfig { initial: 0, ..Default::default() }.validate().is_err());
        assert!(PoolConfig { initial: 31, ..Default::default() }.validate().is_err());
    }
}
