//! Submission history: identity records, per-block diff streams, tutorial
//! state, anonymizing deletion and the research export.
//!
//! Streams are keyed by (user, tutorial, block). Only edit scripts are
//! stored; texts are rebuilt by replaying a stream from the empty string.

mod edit;
mod memory;
mod sqlite;

pub use edit::{apply, diff, ApplyError, EditOp};
pub use memory::MemoryStore;
pub use sqlite::SqliteStore;

use std::io::Write;
use std::sync::Arc;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::role::Role;
use crate::tutorial::TutorialState;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("no history for {0}")]
    UnknownStream(StreamKey),
    #[error("sequence {requested} out of range (latest is {latest})")]
    SequenceOutOfRange { requested: u64, latest: u64 },
    #[error("sequence conflict on {key}: expected {expected}, got {got}")]
    Conflict { key: StreamKey, expected: u64, got: u64 },
    #[error("stored history is corrupt: {0}")]
    Corrupt(#[from] ApplyError),
    #[error("export requires the teacher or admin role")]
    Forbidden,
    #[error("storage failure: {0}")]
    Storage(String),
}

impl From<rusqlite::Error> for HistoryError {
    fn from(e: rusqlite::Error) -> Self {
        HistoryError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for HistoryError {
    fn from(e: serde_json::Error) -> Self {
        HistoryError::Storage(e.to_string())
    }
}

/// The only data kept about a person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub username: String,
    pub issuer: String,
    pub admin: bool,
    #[serde(with = "ts_millis")]
    pub created: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub user_id: String,
    pub tutorial_id: String,
    pub block_id: String,
}

impl StreamKey {
    pub fn new(user_id: &str, tutorial_id: &str, block_id: &str) -> Self {
        StreamKey { user_id: user_id.into(), tutorial_id: tutorial_id.into(), block_id: block_id.into() }
    }
}

impl std::fmt::Display for StreamKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.user_id, self.tutorial_id, self.block_id)
    }
}

/// One export record; the field order is the export's column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionDiff {
    pub user_id: String,
    pub course_id: String,
    pub tutorial_id: String,
    pub block_id: String,
    pub seq: u64,
    #[serde(with = "ts_millis")]
    pub ts: DateTime<Utc>,
    pub ops: Vec<EditOp>,
}

impl SubmissionDiff {
    pub fn key(&self) -> StreamKey {
        StreamKey::new(&self.user_id, &self.tutorial_id, &self.block_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    pub course_id: Option<String>,
    pub tutorial_id: Option<String>,
    /// Inclusive.
    #[serde(default, with = "opt_ts")]
    pub from: Option<DateTime<Utc>>,
    /// Exclusive.
    #[serde(default, with = "opt_ts")]
    pub until: Option<DateTime<Utc>>,
}

impl ExportFilter {
    pub fn admits(&self, d: &SubmissionDiff) -> bool {
        self.course_id.as_ref().is_none_or(|c| *c == d.course_id)
            && self.tutorial_id.as_ref().is_none_or(|t| *t == d.tutorial_id)
            && self.from.is_none_or(|f| d.ts >= f)
            && self.until.is_none_or(|u| d.ts < u)
    }
}

/// Storage backend. Implementations must reject an appended diff whose
/// sequence number is not exactly one past the stream's latest.
pub trait Store: Send + Sync {
    fn put_profile(&self, profile: &UserProfile) -> Result<(), HistoryError>;
    fn profile(&self, user_id: &str) -> Result<Option<UserProfile>, HistoryError>;
    fn profiles(&self) -> Result<Vec<UserProfile>, HistoryError>;
    /// False if there was no such profile.
    fn remove_profile(&self, user_id: &str) -> Result<bool, HistoryError>;

    fn append_diff(&self, diff: &SubmissionDiff) -> Result<(), HistoryError>;
    /// The stream in sequence order; empty if it does not exist.
    fn stream(&self, key: &StreamKey) -> Result<Vec<SubmissionDiff>, HistoryError>;
    /// Admitted diffs ordered by (ts, user, tutorial, block, seq).
    fn diffs(&self, filter: &ExportFilter) -> Result<Vec<SubmissionDiff>, HistoryError>;

    fn save_state(&self, state: &TutorialState) -> Result<(), HistoryError>;
    fn load_state(&self, user_id: &str, tutorial_id: &str) -> Result<Option<TutorialState>, HistoryError>;
}

/// Operations over a [`Store`].
#[derive(Clone)]
pub struct SubmissionLog {
    store: Arc<dyn Store>,
    record_identical: bool,
}

impl SubmissionLog {
    pub fn new(store: Arc<dyn Store>) -> Self {
        SubmissionLog { store, record_identical: false }
    }

    /// Also record empty diffs for unchanged resubmissions.
    pub fn recording_identical(mut self, yes: bool) -> Self {
        self.record_identical = yes;
        self
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.store
    }

    /// Append the change from the stream's current text to `content`.
    /// Returns `None` when the content is unchanged and identical
    /// submissions are skipped.
    pub fn record_submission(
        &self,
        user_id: &str,
        course_id: &str,
        tutorial_id: &str,
        block_id: &str,
        content: &str,
        at: DateTime<Utc>,
    ) -> Result<Option<SubmissionDiff>, HistoryError> {
        if self.store.profile(user_id)?.is_none() {
            return Err(HistoryError::UnknownUser(user_id.into()));
        }
        let key = StreamKey::new(user_id, tutorial_id, block_id);
        let stream = self.store.stream(&key)?;
        let previous = replay(&stream)?;
        if previous == content && !self.record_identical {
            return Ok(None);
        }
        let ops = diff(&previous, content);
        let record = SubmissionDiff {
            user_id: user_id.into(),
            course_id: course_id.into(),
            tutorial_id: tutorial_id.into(),
            block_id: block_id.into(),
            seq: stream.len() as u64 + 1,
            ts: at.trunc_subsecs(3),
            ops,
        };
        self.store.append_diff(&record)?;
        Ok(Some(record))
    }

    /// Text after scripts `1..=upto` (default: all). `upto = 0` is "".
    pub fn reconstruct(&self, key: &StreamKey, upto: Option<u64>) -> Result<String, HistoryError> {
        let stream = self.store.stream(key)?;
        let latest = stream.len() as u64;
        match upto {
            Some(0) => Ok(String::new()),
            _ if stream.is_empty() => Err(HistoryError::UnknownStream(key.clone())),
            Some(k) if k > latest => Err(HistoryError::SequenceOutOfRange { requested: k, latest }),
            Some(k) => replay(&stream[..k as usize]),
            None => replay(&stream),
        }
    }

    pub fn latest_seq(&self, key: &StreamKey) -> Result<u64, HistoryError> {
        Ok(self.store.stream(key)?.len() as u64)
    }

    /// Drop the identity record. Diffs and state stay under the opaque id.
    pub fn delete_user(&self, user_id: &str) -> Result<(), HistoryError> {
        if self.store.remove_profile(user_id)? {
            Ok(())
        } else {
            Err(HistoryError::UnknownUser(user_id.into()))
        }
    }

    pub fn export_history(&self, role: Role, filter: &ExportFilter) -> Result<Vec<SubmissionDiff>, HistoryError> {
        if !role.at_least(Role::Teacher) {
            return Err(HistoryError::Forbidden);
        }
        self.store.diffs(filter)
    }
}

fn replay(stream: &[SubmissionDiff]) -> Result<String, HistoryError> {
    stream.iter().try_fold(String::new(), |text, d| Ok(apply(&text, &d.ops)?))
}

/// One JSON object per line, each terminated by `\n`.
pub fn write_ndjson<W: Write>(records: &[SubmissionDiff], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_ndjson(records: &[SubmissionDiff]) -> String {
    let mut buf = Vec::new();
    write_ndjson(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// RFC 3339, UTC, exactly three fractional digits, `Z` suffix.
pub mod ts_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(ts: &DateTime<Utc>) -> String {
        ts.to_rfc3339_opts(SecondsFormat::Millis, true)
    }

    pub fn parse(s: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
        DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc))
    }

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

mod opt_ts {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
        match ts {
            Some(t) => s.serialize_str(&super::ts_millis::format(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| super::ts_millis::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
