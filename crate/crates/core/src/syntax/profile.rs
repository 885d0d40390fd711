//! Course-level syntax restriction profiles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::diagnostic::Severity;
use crate::locale::Locale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictionKind {
    ForbiddenCommand,
    ForbiddenMethod,
    ForbiddenRule,
    OperatorPattern,
}

impl RestrictionKind {
    pub const ALL: [RestrictionKind; 4] = [
        RestrictionKind::ForbiddenCommand,
        RestrictionKind::ForbiddenMethod,
        RestrictionKind::ForbiddenRule,
        RestrictionKind::OperatorPattern,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RestrictionKind::ForbiddenCommand => "forbidden-command",
            RestrictionKind::ForbiddenMethod => "forbidden-method",
            RestrictionKind::ForbiddenRule => "forbidden-rule",
            RestrictionKind::OperatorPattern => "operator-pattern",
        }
    }

    /// Forbidden tactics block a check; pattern rules are style advice.
    pub fn default_severity(self) -> Severity {
        match self {
            RestrictionKind::OperatorPattern => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

/// The single permitted rule for one logical operator, and the rule names
/// that would express the same step differently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorPattern {
    pub permitted: String,
    #[serde(default)]
    pub alternatives: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxProfile {
    pub id: String,
    /// Empty means every command is allowed.
    #[serde(default)]
    pub allowed_commands: BTreeSet<String>,
    /// Empty means every method is allowed unless forbidden.
    #[serde(default)]
    pub allowed_methods: BTreeSet<String>,
    #[serde(default)]
    pub forbidden_methods: BTreeSet<String>,
    #[serde(default)]
    pub forbidden_rules: BTreeSet<String>,
    #[serde(default)]
    pub operator_patterns: BTreeMap<String, OperatorPattern>,
    #[serde(default = "default_templates")]
    pub messages: BTreeMap<RestrictionKind, BTreeMap<Locale, String>>,
    #[serde(default)]
    pub severities: BTreeMap<RestrictionKind, Severity>,
    /// Whether error-severity restriction findings stop a check before the prover runs.
    #[serde(default = "default_blocking")]
    pub blocking: bool,
}

fn default_blocking() -> bool {
    true
}

/// Built-in message templates. Placeholders: `{name}`, `{operator}`, `{permitted}`.
pub fn default_templates() -> BTreeMap<RestrictionKind, BTreeMap<Locale, String>> {
    let table: [(RestrictionKind, &str, &str); 4] = [
        (
            RestrictionKind::ForbiddenCommand,
            "the command `{name}` is not available in this course",
            "der Befehl `{name}` ist in diesem Kurs nicht verfügbar",
        ),
        (
            RestrictionKind::ForbiddenMethod,
            "the proof method `{name}` is not allowed here; prove the step with explicit rules",
            "die Beweismethode `{name}` ist hier nicht erlaubt; beweise den Schritt mit expliziten Regeln",
        ),
        (
            RestrictionKind::ForbiddenRule,
            "the rule `{name}` is not allowed in this course",
            "die Regel `{name}` ist in diesem Kurs nicht erlaubt",
        ),
        (
            RestrictionKind::OperatorPattern,
            "use `{permitted}` for {operator} instead of `{name}`",
            "verwende `{permitted}` für {operator} statt `{name}`",
        ),
    ];
    table
        .into_iter()
        .map(|(kind, en, de)| (kind, BTreeMap::from([(Locale::En, en.to_string()), (Locale::De, de.to_string())])))
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("profile `{profile}`: method `{method}` is both allowed and forbidden")]
    AllowedAndForbidden { profile: String, method: String },
    #[error("profile `{profile}`: no `{locale}` message for `{}`", kind.code())]
    MissingTemplate { profile: String, kind: RestrictionKind, locale: Locale },
    #[error("profile `{profile}`: operator `{operator}` lists its permitted rule as an alternative")]
    PatternConflict { profile: String, operator: String },
    #[error("invalid profile document: {0}")]
    Parse(String),
}

impl SyntaxProfile {
    /// No restrictions at all.
    pub fn permissive(id: impl Into<String>) -> Self {
        SyntaxProfile {
            id: id.into(),
            allowed_commands: BTreeSet::new(),
            allowed_methods: BTreeSet::new(),
            forbidden_methods: BTreeSet::new(),
            forbidden_rules: BTreeSet::new(),
            operator_patterns: BTreeMap::new(),
            messages: default_templates(),
            severities: BTreeMap::new(),
            blocking: true,
        }
    }

    /// Forbids the automatic tactics `auto`, `simp` and `blast`.
    pub fn no_automation(id: impl Into<String>) -> Self {
        let mut p = SyntaxProfile::permissive(id);
        p.forbidden_methods = ["auto", "simp", "blast"].into_iter().map(String::from).collect();
        p
    }

    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        let profile: SyntaxProfile = toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if let Some(m) = self.allowed_methods.intersection(&self.forbidden_methods).next() {
            return Err(ProfileError::AllowedAndForbidden { profile: self.id.clone(), method: m.clone() });
        }
        for kind in RestrictionKind::ALL {
            for locale in Locale::ALL {
                if !self.messages.get(&kind).is_some_and(|m| m.contains_key(&locale)) {
                    return Err(ProfileError::MissingTemplate { profile: self.id.clone(), kind, locale });
                }
            }
        }
        for (op, pattern) in &self.operator_patterns {
            if pattern.alternatives.contains(&pattern.permitted) {
                return Err(ProfileError::PatternConflict { profile: self.id.clone(), operator: op.clone() });
            }
        }
        Ok(())
    }

    pub fn severity(&self, kind: RestrictionKind) -> Severity {
        self.severities.get(&kind).copied().unwrap_or_else(|| kind.default_severity())
    }

    pub fn command_allowed(&self, command: &str) -> bool {
        self.allowed_commands.is_empty() || self.allowed_commands.contains(command)
    }

    pub fn method_allowed(&self, method: &str) -> bool {
        !self.forbidden_methods.contains(method)
            && (self.allowed_methods.is_empty() || self.allowed_methods.contains(method))
    }

    pub fn rule_allowed(&self, rule: &str) -> bool {
        !self.forbidden_rules.contains(rule)
    }

    /// Render the template for `kind` in `locale`.
    pub fn message(&self, kind: RestrictionKind, locale: Locale, vars: &[(&str, &str)]) -> String {
        let template = self
            .messages
            .get(&kind)
            .and_then(|m| crate::locale::pick(m, locale))
            .cloned()
            .unwrap_or_else(|| kind.code().to_string());
        vars.iter().fold(template, |acc, (key, value)| acc.replace(&format!("{{{key}}}"), value))
    }
}
