//! One lazily acquired prover session per (user, course), released after
//! an idle period.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proofbench_gateway::{GatewayError, Pool, SessionHandle};
use tokio::sync::Mutex;

struct Entry {
    handle: Arc<SessionHandle>,
    last_used: Instant,
}

pub struct Sessions {
    pool: Arc<Pool>,
    idle: Duration,
    map: Mutex<HashMap<(String, String), Entry>>,
}

impl Sessions {
    pub fn new(pool: Arc<Pool>, idle: Duration) -> Self {
        Sessions { pool, idle, map: Mutex::new(HashMap::new()) }
    }

    pub async fn get(&self, user: &str, course: &str) -> Result<Arc<SessionHandle>, GatewayError> {
        let key = (user.to_string(), course.to_string());
        let mut map = self.map.lock().await;
        if let Some(e) = map.get_mut(&key) {
            if !e.handle.is_released() {
                e.last_used = Instant::now();
                return Ok(e.handle.clone());
            }
        }
        let handle = Arc::new(self.pool.acquire().await?);
        map.insert(key, Entry { handle: handle.clone(), last_used: Instant::now() });
        Ok(handle)
    }

    /// Drop and release the session, e.g. after a timeout tore it down.
    pub async fn invalidate(&self, user: &str, course: &str) {
        let removed = self.map.lock().await.remove(&(user.to_string(), course.to_string()));
        if let Some(e) = removed {
            self.pool.release(&e.handle).await;
        }
    }

    pub async fn release_user(&self, user: &str) {
        let removed: Vec<Entry> = {
            let mut map = self.map.lock().await;
            let keys: Vec<_> = map.keys().filter(|(u, _)| u == user).cloned().collect();
            keys.into_iter().filter_map(|k| map.remove(&k)).collect()
        };
        for e in removed {
            self.pool.release(&e.handle).await;
        }
    }

    /// Release sessions unused for the idle period as of `now`.
    pub async fn release_idle(&self, now: Instant) -> usize {
        let removed: Vec<Entry> = {
            let mut map = self.map.lock().await;
            let keys: Vec<_> = map
                .iter()
                .filter(|(_, e)| now.saturating_duration_since(e.last_used) >= self.idle)
                .map(|(k, _)| k.clone())
                .collect();
            keys.into_iter().filter_map(|k| map.remove(&k)).collect()
        };
        for e in &removed {
            self.pool.release(&e.handle).await;
        }
        removed.len()
    }

    pub async fn active(&self) -> usize {
        self.map.lock().await.len()
    }

    pub fn idle_period(&self) -> Duration {
        self.idle
    }
}
