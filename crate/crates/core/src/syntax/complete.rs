//! Prefix completion for editors.

use serde::{Deserialize, Serialize};

use super::keywords::{COMMANDS, METHODS, MINOR_KEYWORDS};
use super::profile::SyntaxProfile;
use super::span::SourceSpan;
use super::symbols::SymbolTable;
use crate::feedback::RuleEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionKind {
    Symbol,
    Keyword,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    /// Text to replace: the prefix before the cursor.
    pub replace: SourceSpan,
    pub insert: String,
    pub kind: CompletionKind,
    /// What the prefix matched (abbreviation, symbol name, keyword or rule name).
    pub label: String,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn is_symbol_prefix_char(c: char) -> bool {
    !c.is_whitespace() && !is_word_char(c) && !"()[]{},\"‹›`".contains(c)
}

fn prefix_start(document: &str, cursor: usize, pred: impl Fn(char) -> bool) -> usize {
    document[..cursor].char_indices().rev().take_while(|&(_, c)| pred(c)).last().map_or(cursor, |(i, _)| i)
}

pub fn complete(document: &str, cursor: usize, profile: &SyntaxProfile, rules: &[RuleEntry]) -> Vec<Completion> {
    complete_with(document, cursor, profile, rules, SymbolTable::bundled())
}

pub fn complete_with(
    document: &str,
    cursor: usize,
    profile: &SyntaxProfile,
    rules: &[RuleEntry],
    symbols: &SymbolTable,
) -> Vec<Completion> {
    if cursor > document.len() || !document.is_char_boundary(cursor) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let word_start = prefix_start(document, cursor, is_word_char);
    if word_start < cursor {
        let prefix = &document[word_start..cursor];
        if document[..word_start].ends_with("\\<") {
            escape_completions(&mut out, SourceSpan::new(word_start - 2, cursor), prefix, symbols);
        } else {
            word_completions(&mut out, SourceSpan::new(word_start, cursor), prefix, profile, rules, symbols);
        }
    } else {
        let start = prefix_start(document, cursor, is_symbol_prefix_char);
        if start < cursor {
            let prefix = &document[start..cursor];
            let span = SourceSpan::new(start, cursor);
            if let Some(name_prefix) = prefix.strip_prefix("\\<") {
                escape_completions(&mut out, span, name_prefix, symbols);
            } else {
                abbreviation_completions(&mut out, span, prefix, symbols);
            }
        }
    }
    out.sort_by(|a, b| {
        let exact = |c: &Completion| c.label != c.replace.slice(document);
        (exact(a), a.kind, &a.label).cmp(&(exact(b), b.kind, &b.label))
    });
    out.dedup_by(|a, b| a.insert == b.insert && a.kind == b.kind);
    out
}

fn abbreviation_completions(out: &mut Vec<Completion>, span: SourceSpan, prefix: &str, symbols: &SymbolTable) {
    for entry in symbols.entries() {
        if let Some(abbrev) = entry.abbreviation.as_deref().filter(|a| a.starts_with(prefix)) {
            out.push(Completion {
                replace: span,
                insert: entry.glyph.to_string(),
                kind: CompletionKind::Symbol,
                label: abbrev.to_string(),
            });
        }
    }
}

fn escape_completions(out: &mut Vec<Completion>, span: SourceSpan, prefix: &str, symbols: &SymbolTable) {
    for entry in symbols.entries().iter().filter(|e| e.name.starts_with(prefix)) {
        out.push(Completion {
            replace: span,
            insert: entry.glyph.to_string(),
            kind: CompletionKind::Symbol,
            label: entry.escape.clone(),
        });
    }
}

fn word_completions(
    out: &mut Vec<Completion>,
    span: SourceSpan,
    prefix: &str,
    profile: &SyntaxProfile,
    rules: &[RuleEntry],
    symbols: &SymbolTable,
) {
    let candidate = |word: &str| word.starts_with(prefix) && word != prefix;
    let keywords = COMMANDS
        .iter()
        .filter(|c| profile.command_allowed(c))
        .chain(MINOR_KEYWORDS.iter())
        .chain(METHODS.iter().filter(|m| profile.method_allowed(m)));
    for word in keywords.filter(|w| candidate(w)) {
        out.push(Completion {
            replace: span,
            insert: word.to_string(),
            kind: CompletionKind::Keyword,
            label: word.to_string(),
        });
    }
    for rule in rules {
        if candidate(&rule.display) && profile.rule_allowed(&rule.display) && profile.rule_allowed(&rule.prover) {
            out.push(Completion {
                replace: span,
                insert: rule.display.clone(),
                kind: CompletionKind::Rule,
                label: rule.display.clone(),
            });
        }
    }
    abbreviation_completions(out, span, prefix, symbols);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::symbols::lookup_symbol;

    fn rules() -> Vec<RuleEntry> {
        vec![
            RuleEntry::new("andI", "conjI", "⟦?P; ?Q⟧ ⟹ ?P ∧ ?Q", "conjunction"),
            RuleEntry::new("andE", "conjE", "⟦?P ∧ ?Q; ⟦?P; ?Q⟧ ⟹ ?R⟧ ⟹ ?R", "conjunction"),
            RuleEntry::new("impI", "impI", "(?P ⟹ ?Q) ⟹ ?P ⟶ ?Q", "implication"),
        ]
    }

    #[test]
    fn abbreviation_expands_to_glyph() {
        let doc = "A /\\";
        let got = complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &rules());
        let first = &got[0];
        assert_eq!(first.kind, CompletionKind::Symbol);
        assert_eq!(first.insert, "∧");
        assert_eq!(first.replace.slice(doc), "/\\");
    }

    #[test]
    fn empty_prefix_yields_nothing() {
        let doc = "lemma  ";
        assert!(complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &rules()).is_empty());
        assert!(complete("", 0, &SyntaxProfile::permissive("p"), &rules()).is_empty());
    }

    #[test]
    fn forbidden_methods_are_not_offered() {
        let doc = "by au";
        let permissive = complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &rules());
        assert!(permissive.iter().any(|c| c.insert == "auto"));
        let restricted = complete(doc, doc.len(), &SyntaxProfile::no_automation("nd"), &rules());
        // filter oracle: permissive result minus the forbidden names
        let expected: Vec<_> = permissive.iter().filter(|c| c.insert != "auto").cloned().collect();
        assert_eq!(restricted, expected);
    }

    #[test]
    fn rule_names_complete_with_display_names() {
        let doc = "by (rule an";
        let got = complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &rules());
        let rules: Vec<_> = got.iter().filter(|c| c.kind == CompletionKind::Rule).map(|c| c.insert.as_str()).collect();
        assert_eq!(rules, ["andE", "andI"]);
        let mut p = SyntaxProfile::permissive("p");
        p.forbidden_rules.insert("conjE".into());
        let got = complete(doc, doc.len(), &p, &self::rules());
        assert!(!got.iter().any(|c| c.insert == "andE"));
    }

    #[test]
    fn escape_prefix_completes_by_name() {
        let doc = "\\<lon";
        let got = complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &[]);
        assert!(got.iter().any(|c| c.insert == "⟶" && c.replace == SourceSpan::new(0, doc.len())));
    }

    #[test]
    fn cursor_in_the_middle() {
        let doc = "A /\\ B";
        let got = complete(doc, 4, &SyntaxProfile::permissive("p"), &[]);
        assert_eq!(got[0].insert, "∧");
        assert!(complete(doc, 3, &SyntaxProfile::permissive("p"), &[])
            .iter()
            .all(|c| c.kind == CompletionKind::Symbol));
    }

    #[test]
    fn symbol_completions_agree_with_lookup() {
        let doc = "-->";
        let got = complete(doc, doc.len(), &SyntaxProfile::permissive("p"), &[]);
        let arrow = lookup_symbol("longrightarrow").into_iter().find(|e| e.name == "longrightarrow").unwrap();
        assert_eq!(got[0].insert, arrow.glyph.to_string());
    }
}
