//! Canned prover responses keyed by the SHA-256 of the theory text.

use std::collections::HashMap;
use std::path::Path;

use proofbench_core::prover::{MessageSeverity, ProofState, ProverMessage, ProverResult};
use proofbench_core::syntax::SourceSpan;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::GatewayError;

pub fn theory_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Where a fixture message or state sits. `at` names the first occurrence
/// of a substring of the theory; `span` gives byte offsets directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureMessage {
    pub severity: MessageSeverity,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureState {
    /// The state is positioned at the end of the first occurrence.
    pub after: String,
    pub text: String,
    pub subgoals: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub sha256: String,
    #[serde(default)]
    pub messages: Vec<FixtureMessage>,
    #[serde(default)]
    pub states: Vec<FixtureState>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    fixtures: Vec<Fixture>,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureSet {
    by_hash: HashMap<String, Fixture>,
}

impl FixtureSet {
    pub fn new(fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        FixtureSet { by_hash: fixtures.into_iter().map(|f| (f.sha256.to_lowercase(), f)).collect() }
    }

    pub fn parse(json: &str) -> Result<Self, GatewayError> {
        let file: FixtureFile = serde_json::from_str(json).map_err(|e| GatewayError::Fixture(e.to_string()))?;
        Ok(FixtureSet::new(file.fixtures))
    }

    /// A single file, or every `*.json` file in a directory.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let read =
            |p: &Path| std::fs::read_to_string(p).map_err(|e| GatewayError::Fixture(format!("{}: {e}", p.display())));
        if path.is_dir() {
            let mut all = Vec::new();
            let mut entries: Vec<_> = std::fs::read_dir(path)
                .map_err(|e| GatewayError::Fixture(e.to_string()))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            for p in entries {
                let file: FixtureFile = serde_json::from_str(&read(&p)?)
                    .map_err(|e| GatewayError::Fixture(format!("{}: {e}", p.display())))?;
                all.extend(file.fixtures);
            }
            Ok(FixtureSet::new(all))
        } else {
            FixtureSet::parse(&read(path)?)
        }
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&Fixture> {
        self.by_hash.get(&theory_hash(text))
    }

    /// The canned result for `text`, with anchors resolved against it.
    pub fn respond(&self, text: &str) -> Option<ProverResult> {
        let f = self.get(text)?;
        let anchor = |a: &str| text.find(a).map(|i| SourceSpan::new(i, i + a.len()));
        let messages = f
            .messages
            .iter()
            .map(|m| ProverMessage {
                severity: m.severity,
                span: m
                    .span
                    .or_else(|| m.at.as_deref().and_then(anchor))
                    .filter(|s| s.is_valid_in(text))
                    .unwrap_or(SourceSpan::empty(0)),
                text: m.text.clone(),
            })
            .collect();
        let states = f
            .states
            .iter()
            .map(|s| ProofState {
                position: anchor(&s.after).map_or(0, |sp| sp.end),
                text: s.text.clone(),
                subgoals: s.subgoals,
            })
            .collect();
        Some(ProverResult::finished(messages, states))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proofbench_core::prover::ProverStatus;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(theory_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn anchors_resolve() {
        let text = "lemma x by (rule impI)";
        let json = format!(
            r#"{{"fixtures":[{{"name":"x","sha256":"{}","messages":[{{"severity":"error","text":"Failed","at":"by"}}],
               "states":[{{"after":"lemma x","text":"goal","subgoals":1}}]}}]}}"#,
            theory_hash(text)
        );
        let set = FixtureSet::parse(&json).unwrap();
        let r = set.respond(text).unwrap();
        assert_eq!(r.status, ProverStatus::FinishedFailed);
        assert_eq!(r.messages[0].span, SourceSpan::new(8, 10));
        assert_eq!(r.states[0].position, 7);
        assert!(set.respond("other").is_none());
    }
}
