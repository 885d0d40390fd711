use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use super::{ExportFilter, HistoryError, Store, StreamKey, SubmissionDiff, UserProfile};
use crate::tutorial::TutorialState;

#[derive(Default)]
struct Inner {
    profiles: BTreeMap<String, UserProfile>,
    streams: BTreeMap<StreamKey, Vec<SubmissionDiff>>,
    states: HashMap<(String, String), TutorialState>,
}

/// Volatile store for tests and single-process runs.
#[derive(Default)]
pub struct MemoryStore {
    inner: RwLock<Inner>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }
}

impl Store for MemoryStore {
    fn put_profile(&self, profile: &UserProfile) -> Result<(), HistoryError> {
        self.write().profiles.insert(profile.user_id.clone(), profile.clone());
        Ok(())
    }

    fn profile(&self, user_id: &str) -> Result<Option<UserProfile>, HistoryError> {
        Ok(self.read().profiles.get(user_id).cloned())
    }

    fn profiles(&self) -> Result<Vec<UserProfile>, HistoryError> {
        Ok(self.read().profiles.values().cloned().collect())
    }

    fn remove_profile(&self, user_id: &str) -> Result<bool, HistoryError> {
        Ok(self.write().profiles.remove(user_id).is_some())
    }

    fn append_diff(&self, diff: &SubmissionDiff) -> Result<(), HistoryError> {
        let key = diff.key();
        let mut inner = self.write();
        let stream = inner.streams.entry(key.clone()).or_default();
        let expected = stream.len() as u64 + 1;
        if diff.seq != expected {
            return Err(HistoryError::Conflict { key, expected, got: diff.seq });
        }
        stream.push(diff.clone());
        Ok(())
    }

    fn stream(&self, key: &StreamKey) -> Result<Vec<SubmissionDiff>, HistoryError> {
        Ok(self.read().streams.get(key).cloned().unwrap_or_default())
    }

    fn diffs(&self, filter: &ExportFilter) -> Result<Vec<SubmissionDiff>, HistoryError> {
        let mut out: Vec<SubmissionDiff> =
            self.read().streams.values().flatten().filter(|d| filter.admits(d)).cloned().collect();
        out.sort_by_key(|d| (d.ts, d.key(), d.seq));
        Ok(out)
    }

    fn save_state(&self, state: &TutorialState) -> Result<(), HistoryError> {
        self.write().states.insert((state.user_id.clone(), state.tutorial_id.clone()), state.clone());
        Ok(())
    }

    fn load_state(&self, user_id: &str, tutorial_id: &str) -> Result<Option<TutorialState>, HistoryError> {
        Ok(self.read().states.get(&(user_id.to_string(), tutorial_id.to_string())).cloned())
    }
}
