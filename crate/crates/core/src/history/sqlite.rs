use std::path::Path;
use std::sync::Mutex;

use rusqlite::{params, Connection, OptionalExtension, Row};

use super::{ts_millis, EditOp, ExportFilter, HistoryError, Store, StreamKey, SubmissionDiff, UserProfile};
use crate::tutorial::TutorialState;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS profiles (
    user_id  TEXT PRIMARY KEY,
    username TEXT NOT NULL,
    issuer   TEXT NOT NULL,
    admin    INTEGER NOT NULL,
    created  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS diffs (
    user_id     TEXT NOT NULL,
    course_id   TEXT NOT NULL,
    tutorial_id TEXT NOT NULL,
    block_id    TEXT NOT NULL,
    seq         INTEGER NOT NULL,
    ts          TEXT NOT NULL,
    ops         TEXT NOT NULL,
    PRIMARY KEY (user_id, tutorial_id, block_id, seq)
);
CREATE INDEX IF NOT EXISTS diffs_ts ON diffs (ts);
CREATE TABLE IF NOT EXISTS states (
    user_id     TEXT NOT NULL,
    tutorial_id TEXT NOT NULL,
    state       TEXT NOT NULL,
    PRIMARY KEY (user_id, tutorial_id)
);
";

/// Persistent store on an SQLite database file.
pub struct SqliteStore {
    conn: Mutex<Connection>,
}

impl SqliteStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, HistoryError> {
        Self::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<Self, HistoryError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, HistoryError> {
        conn.execute_batch("PRAGMA journal_mode = WAL;")?;
        conn.execute_batch(SCHEMA)?;
        Ok(SqliteStore { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn text_err(e: impl std::error::Error + Send + Sync + 'static) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(0, rusqlite::types::Type::Text, Box::new(e))
}

fn profile_row(row: &Row<'_>) -> rusqlite::Result<UserProfile> {
    let created: String = row.get(4)?;
    Ok(UserProfile {
        user_id: row.get(0)?,
        username: row.get(1)?,
        issuer: row.get(2)?,
        admin: row.get(3)?,
        created: ts_millis::parse(&created).map_err(text_err)?,
    })
}

fn diff_row(row: &Row<'_>) -> rusqlite::Result<SubmissionDiff> {
    let ts: String = row.get(5)?;
    let ops: String = row.get(6)?;
    Ok(SubmissionDiff {
        user_id: row.get(0)?,
        course_id: row.get(1)?,
        tutorial_id: row.get(2)?,
        block_id: row.get(3)?,
        seq: row.get::<_, i64>(4)? as u64,
        ts: ts_millis::parse(&ts).map_err(text_err)?,
        ops: serde_json::from_str::<Vec<EditOp>>(&ops).map_err(text_err)?,
    })
}

const DIFF_COLUMNS: &str = "user_id, course_id, tutorial_id, block_id, seq, ts, ops";

impl Store for SqliteStore {
    fn put_profile(&self, p: &UserProfile) -> Result<(), HistoryError> {
        self.conn().execute(
            "INSERT INTO profiles (user_id, username, issuer, admin, created) VALUES (?1, ?2, ?3, ?4, ?5)
             ON CONFLICT (user_id) DO UPDATE SET username = ?2, issuer = ?3, admin = ?4",
            params![p.user_id, p.username, p.issuer, p.admin, ts_millis::format(&p.created)],
        )?;
        Ok(())
    }

    fn profile(&self, user_id: &str) -> Result<Option<UserProfile>, HistoryError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT user_id, username, issuer, admin, created FROM profiles WHERE user_id = ?1",
                [user_id],
                profile_row,
            )
            .optional()?)
    }

    fn profiles(&self) -> Result<Vec<UserProfile>, HistoryError> {
        let conn = self.conn();
        let mut stmt =
            conn.prepare("SELECT user_id, username, issuer, admin, created FROM profiles ORDER BY user_id")?;
        let rows = stmt.query_map([], profile_row)?.collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    fn remove_profile(&self, user_id: &str) -> Result<bool, HistoryError> {
        Ok(self.conn().execute("DELETE FROM profiles WHERE user_id = ?1", [user_id])? > 0)
    }

    fn append_diff(&self, d: &SubmissionDiff) -> Result<(), HistoryError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let latest: i64 = tx.query_row(
            "SELECT COALESCE(MAX(seq), 0) FROM diffs WHERE user_id = ?1 AND tutorial_id = ?2 AND block_id = ?3",
            params![d.user_id, d.tutorial_id, d.block_id],
            |r| r.get(0),
        )?;
        let expected = latest as u64 + 1;
        if d.seq != expected {
            return Err(HistoryError::Conflict { key: d.key(), expected, got: d.seq });
        }
        tx.execute(
            &format!("INSERT INTO diffs ({DIFF_COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)"),
            params![
                d.user_id,
                d.course_id,
                d.tutorial_id,
                d.block_id,
                d.seq as i64,
                ts_millis::format(&d.ts),
                serde_json::to_string(&d.ops)?
            ],
        )?;
        tx.commit()?;
        Ok(())
    }

    fn stream(&self, key: &StreamKey) -> Result<Vec<SubmissionDiff>, HistoryError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(&format!(
            "SELECT {DIFF_COLUMNS} FROM diffs WHERE user_id = ?1 AND tutorial_id = ?2 AND block_id = ?3 ORDER BY seq"
        ))?;
        let rows = stmt
            .query_map(params![key.user_id, key.tutorial_id, key.block_id], diff_row)?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    fn diffs(&self, filter: &ExportFilter) -> Result<Vec<SubmissionDiff>, HistoryError> {
        let conn = self.conn();
        // Fixed-width millisecond timestamps sort lexicographically.
        let mut stmt = conn
            .prepare(&format!("SELECT {DIFF_COLUMNS} FROM diffs ORDER BY ts, user_id, tutorial_id, block_id, seq"))?;
        let rows = stmt.query_map([], diff_row)?.collect::<Result<Vec<_>, _>>()?;
        Ok(rows.into_iter().filter(|d| filter.admits(d)).collect())
    }

    fn save_state(&self, state: &TutorialState) -> Result<(), HistoryError> {
        self.conn().execute(
            "INSERT INTO states (user_id, tutorial_id, state) VALUES (?1, ?2, ?3)
             ON CONFLICT (user_id, tutorial_id) DO UPDATE SET state = ?3",
            params![state.user_id, state.tutorial_id, serde_json::to_string(state)?],
        )?;
        Ok(())
    }

    fn load_state(&self, user_id: &str, tutorial_id: &str) -> Result<Option<TutorialState>, HistoryError> {
        let raw: Option<String> = self
            .conn()
            .query_row(
                "SELECT state FROM states WHERE user_id = ?1 AND tutorial_id = ?2",
                [user_id, tutorial_id],
                |r| r.get(0),
            )
            .optional()?;
        Ok(raw.map(|s| serde_json::from_str(&s)).transpose()?)
    }
}
