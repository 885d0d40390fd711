use regex::Regex;
use serde::Deserialize;

use super::FeedbackError;
use crate::locale::{pick, Locale, Localized};
use crate::prover::MessageSeverity;

const BUNDLED: &str = include_str!("../../data/hints.toml");

#[derive(Debug, Clone)]
pub struct HintRule {
    pub id: String,
    pub pattern: Regex,
    pub severity: Option<MessageSeverity>,
    /// Empty matches any command.
    pub commands: Vec<String>,
    pub hints: Localized<Vec<String>>,
}

impl HintRule {
    pub fn matches(&self, text: &str, severity: MessageSeverity, command: Option<&str>) -> bool {
        self.pattern.is_match(text)
            && self.severity.is_none_or(|s| s == severity)
            && (self.commands.is_empty() || command.is_some_and(|c| self.commands.iter().any(|x| x == c)))
    }

    pub fn hints_for(&self, locale: Locale) -> &[String] {
        pick(&self.hints, locale).map_or(&[], Vec::as_slice)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHint {
    id: String,
    pattern: String,
    severity: Option<MessageSeverity>,
    #[serde(default)]
    command: Vec<String>,
    hints: Localized<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default)]
    hint: Vec<RawHint>,
}

/// Ordered hint rules; the first matching rule wins.
#[derive(Debug, Clone, Default)]
pub struct HintCatalog {
    rules: Vec<HintRule>,
}

impl HintCatalog {
    pub fn new(rules: Vec<HintRule>) -> Result<Self, FeedbackError> {
        for r in &rules {
            for locale in Locale::ALL {
                if r.hints.get(&locale).is_none_or(Vec::is_empty) {
                    return Err(FeedbackError::MissingHints { id: r.id.clone(), locale });
                }
            }
        }
        Ok(HintCatalog { rules })
    }

    pub fn from_toml(text: &str) -> Result<Self, FeedbackError> {
        let raw: RawCatalog = toml::from_str(text).map_err(|e| FeedbackError::Parse(e.to_string()))?;
        let rules = raw
            .hint
            .into_iter()
            .map(|h| {
                let pattern =
                    Regex::new(&h.pattern).map_err(|e| FeedbackError::Parse(format!("hint `{}`: {e}", h.id)))?;
                Ok(HintRule { id: h.id, pattern, severity: h.severity, commands: h.command, hints: h.hints })
            })
            .collect::<Result<Vec<_>, FeedbackError>>()?;
        HintCatalog::new(rules)
    }

    pub fn bundled() -> Self {
        HintCatalog::from_toml(BUNDLED).expect("bundled hint catalog is well-formed")
    }

    pub fn rules(&self) -> &[HintRule] {
        &self.rules
    }

    pub fn first_match(&self, text: &str, severity: MessageSeverity, command: Option<&str>) -> Option<&HintRule> {
        self.rules.iter().find(|r| r.matches(text, severity, command))
    }
}
