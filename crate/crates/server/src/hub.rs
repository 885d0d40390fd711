//! Fan-out of stream messages to a user's open channels.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::mpsc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageType {
    CheckResult,
    Notice,
}

/// A frame on `/v1/stream`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default)]
    pub request_id: Option<String>,
    pub payload: Value,
}

impl StreamMessage {
    pub fn notice(request_id: Option<String>, payload: Value) -> Self {
        StreamMessage { kind: MessageType::Notice, request_id, payload }
    }
}

type Subscriber = (u64, mpsc::UnboundedSender<StreamMessage>);

#[derive(Default)]
pub struct Hub {
    next: AtomicU64,
    subscribers: Mutex<HashMap<String, Vec<Subscriber>>>,
}

impl Hub {
    pub fn subscribe(&self, user: &str) -> (u64, mpsc::UnboundedReceiver<StreamMessage>) {
        let (tx, rx) = mpsc::unbounded_channel();
        let id = self.next.fetch_add(1, Ordering::Relaxed);
        self.subscribers.lock().unwrap_or_else(|e| e.into_inner()).entry(user.to_string()).or_default().push((id, tx));
        (id, rx)
    }

    pub fn unsubscribe(&self, user: &str, id: u64) {
        let mut subs = self.subscribers.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(list) = subs.get_mut(user) {
            list.retain(|(i, _)| *i != id);
            if list.is_empty() {
                subs.remove(user);
            }
        }
    }

    /// Deliver to every open channel of `user`; returns how many received it.
    pub fn send(&self, user: &str, message: &StreamMessage) -> usize {
        let subs = self.subscribers.lock().unwrap_or_else(|e| e.into_inner());
        subs.get(user).map_or(0, |list| list.iter().filter(|(_, tx)| tx.send(message.clone()).is_ok()).count())
    }
}
