//! Token-level enforcement of a [`SyntaxProfile`].
//!
//! Names are checked only where they occur as whole identifier tokens in a
//! method position (arguments of `by`, `apply`, `proof`, `qed`, `apply_end`)
//! or a rule position (arguments of fact commands such as `from` and
//! `using`). Names inside strings and cartouches are never inspected.

use super::diagnostic::{Diagnostic, Layer};
use super::keywords::{FACT_COMMANDS, METHOD_COMMANDS};
use super::outline::CommandOutline;
use super::profile::{RestrictionKind, SyntaxProfile};
use super::token::{Token, TokenKind};
use crate::locale::Locale;

pub fn check_restrictions(outlines: &[CommandOutline], profile: &SyntaxProfile) -> Vec<Diagnostic> {
    check_restrictions_localized(outlines, profile, Locale::En)
}

pub fn check_restrictions_localized(
    outlines: &[CommandOutline],
    profile: &SyntaxProfile,
    locale: Locale,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut report = |kind: RestrictionKind, token_span, vars: &[(&str, &str)]| {
        out.push(Diagnostic {
            severity: profile.severity(kind),
            span: token_span,
            code: kind.code().to_string(),
            message: profile.message(kind, locale, vars),
            layer: Layer::Restriction,
        });
    };

    for outline in outlines {
        if !profile.command_allowed(&outline.name) {
            report(RestrictionKind::ForbiddenCommand, outline.keyword_span, &[("name", &outline.name)]);
        }
        let method_position = METHOD_COMMANDS.contains(&outline.name.as_str());
        if !method_position && !FACT_COMMANDS.contains(&outline.name.as_str()) {
            continue;
        }
        let mut previous: Option<&Token> = None;
        for token in &outline.arguments {
            if is_name_token(token) {
                let head = method_position && is_method_head(previous);
                if let Some(kind) = classify(&token.text, head, profile) {
                    let (operator, permitted) = pattern_for(&token.text, profile).unwrap_or(("", ""));
                    report(
                        kind,
                        token.span,
                        &[("name", &token.text), ("operator", operator), ("permitted", permitted)],
                    );
                }
            }
            previous = Some(token);
        }
    }
    out.sort_by_key(|d| (d.span.start, d.span.end));
    out
}

fn is_name_token(token: &Token) -> bool {
    matches!(token.kind, TokenKind::Identifier | TokenKind::LongIdentifier)
}

/// A method name follows the command keyword directly or an opening
/// parenthesis or a combinator.
fn is_method_head(previous: Option<&Token>) -> bool {
    match previous {
        None => true,
        Some(t) => matches!(t.text.as_str(), "(" | "," | ";" | "|"),
    }
}

fn classify(name: &str, head: bool, profile: &SyntaxProfile) -> Option<RestrictionKind> {
    let unlisted = head && !profile.allowed_methods.is_empty() && !profile.allowed_methods.contains(name);
    if profile.forbidden_methods.contains(name) || unlisted {
        Some(RestrictionKind::ForbiddenMethod)
    } else if profile.forbidden_rules.contains(name) {
        Some(RestrictionKind::ForbiddenRule)
    } else if pattern_for(name, profile).is_some() {
        Some(RestrictionKind::OperatorPattern)
    } else {
        None
    }
}

fn pattern_for<'p>(name: &str, profile: &'p SyntaxProfile) -> Option<(&'p str, &'p str)> {
    profile
        .operator_patterns
        .iter()
        .find(|(_, p)| p.alternatives.contains(name))
        .map(|(op, p)| (op.as_str(), p.permitted.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::profile::OperatorPattern;
    use crate::syntax::{outline, tokenize, Severity};

    fn check(doc: &str, profile: &SyntaxProfile) -> Vec<Diagnostic> {
        let (outlines, _) = outline(&tokenize(doc));
        check_restrictions(&outlines, profile)
    }

    #[test]
    fn by_auto_is_flagged_on_the_method_token() {
        let doc = "by auto";
        let diags = check(doc, &SyntaxProfile::no_automation("nd"));
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "forbidden-method");
        assert_eq!(diags[0].severity, Severity::Error);
        assert_eq!(diags[0].span.slice(doc), "auto");
    }

    #[test]
    fn by_assumption_is_fine() {
        assert!(check("by assumption", &SyntaxProfile::no_automation("nd")).is_empty());
    }

    #[test]
    fn two_violations_in_offset_order() {
        let doc = "apply simp apply blast";
        let diags = check(doc, &SyntaxProfile::no_automation("nd"));
        let spans: Vec<_> = diags.iter().map(|d| d.span.slice(doc)).collect();
        assert_eq!(spans, ["simp", "blast"]);
        assert!(diags[0].span.start < diags[1].span.start);
    }

    #[test]
    fn names_inside_strings_are_ignored() {
        let doc = "lemma \"auto ∧ simp\" by (rule conjI)";
        assert!(check(doc, &SyntaxProfile::no_automation("nd")).is_empty());
    }

    #[test]
    fn methods_inside_parentheses_and_combinators() {
        let doc = "apply (simp add: foo) by (rule x, blast)";
        let diags = check(doc, &SyntaxProfile::no_automation("nd"));
        assert_eq!(diags.iter().map(|d| d.span.slice(doc)).collect::<Vec<_>>(), ["simp", "blast"]);
    }

    #[test]
    fn allowed_methods_restrict_heads_only() {
        let mut p = SyntaxProfile::permissive("strict");
        p.allowed_methods = ["rule", "assumption"].into_iter().map(String::from).collect();
        let doc = "by (rule conjI) apply (erule conjE)";
        let diags = check(doc, &p);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].span.slice(doc), "erule");
    }

    #[test]
    fn forbidden_rules_in_fact_and_method_positions() {
        let mut p = SyntaxProfile::permissive("p");
        p.forbidden_rules.insert("ccontr".into());
        let doc = "from ccontr show \"A\" by (rule ccontr)";
        let diags = check(doc, &p);
        assert_eq!(diags.len(), 2);
        assert!(diags.iter().all(|d| d.code == "forbidden-rule"));
    }

    #[test]
    fn forbidden_commands() {
        let mut p = SyntaxProfile::permissive("p");
        p.allowed_commands = ["lemma", "by"].into_iter().map(String::from).collect();
        let doc = "lemma \"A\" sorry";
        let diags = check(doc, &p);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "forbidden-command");
        assert_eq!(diags[0].span.slice(doc), "sorry");
    }

    #[test]
    fn operator_pattern_is_a_warning_with_advice() {
        let mut p = SyntaxProfile::permissive("p");
        p.operator_patterns.insert(
            "conjunction".into(),
            OperatorPattern { permitted: "conjI".into(), alternatives: ["context_conjI".to_string()].into() },
        );
        let diags = check("by (rule context_conjI)", &p);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert_eq!(diags[0].message, "use `conjI` for conjunction instead of `context_conjI`");
    }
}
