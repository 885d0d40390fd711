//! Learner-facing feedback: prover messages mapped to blocks, labeled, and
//! supplemented with hints. The prover's own text is never rewritten.

mod hints;
mod rules;

pub use hints::{HintCatalog, HintRule};
pub use rules::{RuleCatalog, RuleEntry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locale::Locale;
use crate::prover::{MessageSeverity, ProverResult};
use crate::syntax::{outline, tokenize, CommandOutline, Diagnostic, Layer, Severity, SourceSpan, SyntaxProfile};
use crate::tutorial::{AssembledTheory, MappedOrigin};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedbackError {
    #[error("invalid catalog: {0}")]
    Parse(String),
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("hint rule `{id}` has no `{locale}` hints")]
    MissingHints { id: String, locale: Locale },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackKind {
    OuterSyntax,
    Restriction,
    Prover,
}

impl From<Layer> for FeedbackKind {
    fn from(l: Layer) -> Self {
        match l {
            Layer::OuterSyntax => FeedbackKind::OuterSyntax,
            Layer::Restriction => FeedbackKind::Restriction,
            Layer::Prover => FeedbackKind::Prover,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "kebab-case")]
pub enum FeedbackOrigin {
    /// `span` is relative to the block content.
    Block { block_id: String, span: SourceSpan, multi_segment: bool },
    /// Not attributable to any visible block.
    Tutorial { notice: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackItem {
    pub severity: Severity,
    pub kind: FeedbackKind,
    pub origin: FeedbackOrigin,
    /// Who produced `raw_text`, e.g. "Prover output".
    pub label: String,
    /// Verbatim message text.
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint_id: Option<String>,
    pub hints: Vec<String>,
}

/// Label shown next to text produced by `kind`.
pub fn label(kind: FeedbackKind, locale: Locale) -> &'static str {
    match (kind, locale) {
        (FeedbackKind::Prover, Locale::En) => "Prover output",
        (FeedbackKind::Prover, Locale::De) => "Ausgabe des Beweisers",
        (FeedbackKind::OuterSyntax, Locale::En) => "Syntax check",
        (FeedbackKind::OuterSyntax, Locale::De) => "Syntaxprüfung",
        (FeedbackKind::Restriction, Locale::En) => "Course restriction",
        (FeedbackKind::Restriction, Locale::De) => "Kurseinschränkung",
    }
}

pub fn hidden_notice(locale: Locale) -> &'static str {
    match locale {
        Locale::En => "An internal definition of this tutorial failed. Please contact your teacher.",
        Locale::De => {
            "Eine interne Definition dieses Tutorials ist fehlgeschlagen. Bitte wende dich an deine Lehrkraft."
        }
    }
}

/// The command whose outline contains `offset`, or the last one before it.
fn command_at(outlines: &[CommandOutline], offset: usize) -> Option<&str> {
    let idx = outlines.partition_point(|o| o.span.start <= offset);
    idx.checked_sub(1).map(|i| outlines[i].name.as_str())
}

/// One feedback item per prover message, in message order.
pub fn enrich(
    result: &ProverResult,
    assembled: &AssembledTheory,
    catalog: &HintCatalog,
    locale: Locale,
) -> Vec<FeedbackItem> {
    if result.messages.is_empty() {
        return Vec::new();
    }
    let (outlines, _) = outline(&tokenize(&assembled.text));
    result
        .messages
        .iter()
        .map(|msg| {
            let origin = match assembled.map_span(msg.span) {
                Ok(MappedOrigin::Block { block_id, span, multi_segment }) => {
                    FeedbackOrigin::Block { block_id, span, multi_segment }
                }
                Ok(MappedOrigin::Hidden) | Err(_) => FeedbackOrigin::Tutorial { notice: hidden_notice(locale).into() },
            };
            let command = command_at(&outlines, msg.span.start);
            let rule = catalog.first_match(&msg.text, msg.severity, command);
            FeedbackItem {
                severity: msg.severity.into(),
                kind: FeedbackKind::Prover,
                origin,
                label: label(FeedbackKind::Prover, locale).into(),
                raw_text: msg.text.clone(),
                hint_id: rule.map(|r| r.id.clone()),
                hints: rule.map(|r| r.hints_for(locale).to_vec()).unwrap_or_default(),
            }
        })
        .collect()
}

/// Feedback for a syntax-layer diagnostic already local to `block_id`.
/// Hint patterns are matched against the diagnostic's code and message.
pub fn diagnostic_item(block_id: &str, diagnostic: &Diagnostic, catalog: &HintCatalog, locale: Locale) -> FeedbackItem {
    let severity = match diagnostic.severity {
        Severity::Error => MessageSeverity::Error,
        Severity::Warning => MessageSeverity::Warning,
        Severity::Info => MessageSeverity::Information,
    };
    let rule = catalog
        .rules()
        .iter()
        .find(|r| r.pattern.is_match(&diagnostic.code) || r.matches(&diagnostic.message, severity, None));
    let kind = FeedbackKind::from(diagnostic.layer);
    FeedbackItem {
        severity: diagnostic.severity,
        kind,
        origin: FeedbackOrigin::Block { block_id: block_id.into(), span: diagnostic.span, multi_segment: false },
        label: label(kind, locale).into(),
        raw_text: diagnostic.message.clone(),
        hint_id: rule.map(|r| r.id.clone()),
        hints: rule.map(|r| r.hints_for(locale).to_vec()).unwrap_or_default(),
    }
}

pub fn list_rules(catalog: &RuleCatalog, profile: &SyntaxProfile, category: Option<&str>) -> Vec<RuleEntry> {
    catalog.list_rules(profile, category)
}

pub fn search_rules(catalog: &RuleCatalog, query: &str) -> Vec<RuleEntry> {
    catalog.search_rules(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prover::{ProverMessage, ProverStatus};
    use crate::tutorial::{assemble_theory, Block, BlockBody, Section, TheoryHeader, Tutorial, TutorialState};

    fn assembled() -> AssembledTheory {
        let t = Tutorial {
            id: "t".into(),
            title: [(Locale::En, "T".to_string())].into(),
            profile: "p".into(),
            header: TheoryHeader { theory: "T".into(), imports: "Main".into() },
            footer: "end".into(),
            sections: vec![Section {
                title: Default::default(),
                blocks: vec![
                    Block { id: "h".into(), body: BlockBody::Hidden { code: "lemmas andI = conjI".into() } },
                    Block {
                        id: "t1".into(),
                        body: BlockBody::Task { initial: "lemma \"A ∧ B\" by (rule impI)".into() },
                    },
                ],
            }],
        };
        assemble_theory(&t, &TutorialState::fresh("u", &t)).unwrap()
    }

    fn message(text: &str, span: SourceSpan) -> ProverMessage {
        ProverMessage { severity: MessageSeverity::Error, span, text: text.into() }
    }

    #[test]
    fn failed_method_at_by_gets_hint_list() {
        let a = assembled();
        let by = a.text.find("by (rule").unwrap();
        let text = "Failed to apply initial proof method⌂:\ngoal (1 subgoal):\n 1. A ∧ B";
        let result = ProverResult::finished(vec![message(text, SourceSpan::new(by, by + 2))], vec![]);
        let items = enrich(&result, &a, &HintCatalog::bundled(), Locale::En);
        assert_eq!(items.len(), 1);
        let item = &items[0];
        assert_eq!(item.raw_text, text);
        assert_eq!(item.hint_id.as_deref(), Some("failed-proof-method"));
        assert_eq!(item.hints.len(), 3);
        assert!(item.hints[0].contains("rule name"));
        assert!(item.hints[1].contains("conclusion"));
        assert!(item.hints[2].contains("assumptions"));
        let seg = a.block_segment("t1").unwrap().span;
        assert_eq!(
            item.origin,
            FeedbackOrigin::Block {
                block_id: "t1".into(),
                span: SourceSpan::new(by - seg.start, by - seg.start + 2),
                multi_segment: false
            }
        );
        assert_eq!(item.label, "Prover output");
    }

    #[test]
    fn ok_result_without_messages() {
        let result = ProverResult { status: ProverStatus::FinishedOk, messages: vec![], states: vec![] };
        assert!(enrich(&result, &assembled(), &HintCatalog::bundled(), Locale::En).is_empty());
    }

    #[test]
    fn hidden_message_is_tutorial_level() {
        let a = assembled();
        let at = a.text.find("lemmas").unwrap();
        let result =
            ProverResult::finished(vec![message("Undefined fact: \"conjI\"", SourceSpan::new(at, at + 6))], vec![]);
        let items = enrich(&result, &a, &HintCatalog::bundled(), Locale::De);
        assert!(matches!(&items[0].origin, FeedbackOrigin::Tutorial { notice } if notice.contains("Lehrkraft")));
        assert_eq!(items[0].raw_text, "Undefined fact: \"conjI\"");
    }

    #[test]
    fn unmatched_messages_pass_through() {
        let a = assembled();
        let result = ProverResult::finished(
            vec![message("odd failure", SourceSpan::new(a.text.len() - 1, a.text.len()))],
            vec![],
        );
        let items = enrich(&result, &a, &HintCatalog::bundled(), Locale::En);
        assert!(items[0].hints.is_empty());
        assert_eq!(items[0].hint_id, None);
    }

    #[test]
    fn diagnostics_get_hints_by_code() {
        let d = Diagnostic {
            severity: Severity::Error,
            span: SourceSpan::new(3, 7),
            code: "forbidden-method".into(),
            message: "the proof method `auto` is not allowed here".into(),
            layer: Layer::Restriction,
        };
        let item = diagnostic_item("t1", &d, &HintCatalog::bundled(), Locale::En);
        assert_eq!(item.kind, FeedbackKind::Restriction);
        assert_eq!(item.hint_id.as_deref(), Some("forbidden-tactic"));
        assert_eq!(item.raw_text, d.message);
    }
}
