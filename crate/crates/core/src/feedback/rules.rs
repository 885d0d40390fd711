//! The relabeled rule catalog.
//!
//! Every rule has a didactic display name (what students type and see) and
//! the prover's own name. Assembled theories stay valid for the prover by
//! declaring each display name as an alias in hidden code, see
//! [`RuleCatalog::alias_declarations`].

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::FeedbackError;
use crate::locale::Localized;
use crate::syntax::SyntaxProfile;

const BUNDLED: &str = include_str!("../../data/rules.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub display: String,
    pub prover: String,
    pub schema: String,
    pub category: String,
    #[serde(default)]
    pub description: Localized,
}

impl RuleEntry {
    pub fn new(display: &str, prover: &str, schema: &str, category: &str) -> Self {
        RuleEntry {
            display: display.into(),
            prover: prover.into(),
            schema: schema.into(),
            category: category.into(),
            description: Localized::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleCatalog {
    entries: Vec<RuleEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    rule: Vec<RuleEntry>,
}

impl RuleCatalog {
    pub fn new(entries: Vec<RuleEntry>) -> Result<Self, FeedbackError> {
        let mut displays = HashSet::new();
        let mut provers = HashSet::new();
        for e in &entries {
            if !displays.insert(e.display.as_str()) {
                return Err(FeedbackError::Duplicate(format!("display name `{}`", e.display)));
            }
            if !provers.insert(e.prover.as_str()) {
                return Err(FeedbackError::Duplicate(format!("prover name `{}`", e.prover)));
            }
        }
        Ok(RuleCatalog { entries })
    }

    pub fn from_toml(text: &str) -> Result<Self, FeedbackError> {
        let raw: RawCatalog = toml::from_str(text).map_err(|e| FeedbackError::Parse(e.to_string()))?;
        RuleCatalog::new(raw.rule)
    }

    pub fn bundled() -> Self {
        RuleCatalog::from_toml(BUNDLED).expect("bundled rule catalog is well-formed")
    }

    pub fn entries(&self) -> &[RuleEntry] {
        &self.entries
    }

    pub fn to_prover_name<'a>(&'a self, display: &str) -> Option<&'a str> {
        self.entries.iter().find(|e| e.display == display).map(|e| e.prover.as_str())
    }

    pub fn to_display_name<'a>(&'a self, prover: &str) -> Option<&'a str> {
        self.entries.iter().find(|e| e.prover == prover).map(|e| e.display.as_str())
    }

    /// `lemmas display = prover` for every relabeled rule, one per line.
    pub fn alias_declarations(&self) -> String {
        self.entries
            .iter()
            .filter(|e| e.display != e.prover)
            .map(|e| format!("lemmas {} = {}", e.display, e.prover))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Rules permitted by `profile`, optionally restricted to one category,
    /// ordered by category then display name.
    pub fn list_rules(&self, profile: &SyntaxProfile, category: Option<&str>) -> Vec<RuleEntry> {
        let mut out: Vec<RuleEntry> = self
            .entries
            .iter()
            .filter(|e| profile.rule_allowed(&e.display) && profile.rule_allowed(&e.prover))
            .filter(|e| category.is_none_or(|c| e.category == c))
            .cloned()
            .collect();
        sort(&mut out);
        out
    }

    /// Case-insensitive substring search over display name, prover name and schema.
    pub fn search_rules(&self, query: &str) -> Vec<RuleEntry> {
        let q = query.to_lowercase();
        let mut out: Vec<RuleEntry> = self
            .entries
            .iter()
            .filter(|e| {
                e.display.to_lowercase().contains(&q)
                    || e.prover.to_lowercase().contains(&q)
                    || e.schema.to_lowercase().contains(&q)
            })
            .cloned()
            .collect();
        sort(&mut out);
        out
    }

    pub fn categories(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.category.as_str()).or_default() += 1;
        }
        m
    }
}

fn sort(entries: &mut [RuleEntry]) {
    entries.sort_by(|a, b| (&a.category, &a.display).cmp(&(&b.category, &b.display)));
}
