//! Keyword tables for the outer syntax.
//!
//! Commands start a new command span during outlining. Minor keywords only
//! structure the arguments of a command. Method names are plain identifiers
//! to the lexer; they are listed here for completion and the mock prover.

/// Commands recognized by the outliner.
pub const COMMANDS: &[&str] = &[
    // theory level
    "theory",
    "end",
    "section",
    "subsection",
    "subsubsection",
    "text",
    "txt",
    "chapter",
    "paragraph",
    "lemma",
    "theorem",
    "corollary",
    "proposition",
    "schematic_goal",
    "lemmas",
    "declare",
    "definition",
    "abbreviation",
    "fun",
    "function",
    "primrec",
    "datatype",
    "type_synonym",
    "typedecl",
    "inductive",
    "inductive_set",
    "locale",
    "context",
    "notepad",
    "value",
    "term",
    "thm",
    "typ",
    "find_theorems",
    "print_state",
    "consts",
    "axiomatization",
    "named_theorems",
    // proof level
    "proof",
    "qed",
    "by",
    "apply",
    "apply_end",
    "done",
    "sorry",
    "oops",
    "..",
    ".",
    "assume",
    "presume",
    "fix",
    "obtain",
    "define",
    "consider",
    "show",
    "have",
    "thus",
    "hence",
    "then",
    "from",
    "with",
    "using",
    "unfolding",
    "note",
    "also",
    "finally",
    "moreover",
    "ultimately",
    "next",
    "let",
    "case",
    "supply",
    "subgoal",
    "prefer",
    "defer",
    "back",
];

/// Minor keywords: structural words inside command arguments.
pub const MINOR_KEYWORDS: &[&str] = &[
    "and",
    "assumes",
    "begin",
    "binder",
    "defines",
    "fixes",
    "for",
    "if",
    "imports",
    "in",
    "infix",
    "infixl",
    "infixr",
    "is",
    "keywords",
    "obtains",
    "open",
    "overloaded",
    "shows",
    "structure",
    "when",
    "where",
    "::",
];

/// Symbolic minor keywords. A maximal run of symbol characters equal to
/// one of these lexes as a keyword rather than a symbol identifier.
pub const SYMBOL_KEYWORDS: &[&str] = &["!", "!!", "%", "+", "-", "--", "<", "<=", "=", "==", "=>", "?", "|"];

/// Proof methods offered for completion and understood by the mock prover.
pub const METHODS: &[&str] = &[
    "arith",
    "assumption",
    "auto",
    "blast",
    "cases",
    "clarify",
    "contradiction",
    "drule",
    "elim",
    "erule",
    "fact",
    "fastforce",
    "force",
    "frule",
    "induct",
    "induction",
    "intro",
    "linarith",
    "metis",
    "presburger",
    "rule",
    "safe",
    "simp",
    "subst",
    "this",
    "unfold",
];

/// Commands whose arguments are a proof method expression.
pub const METHOD_COMMANDS: &[&str] = &["by", "apply", "apply_end", "proof", "qed"];

/// Commands whose arguments name facts (rules).
pub const FACT_COMMANDS: &[&str] = &["from", "with", "using", "unfolding", "note", "lemmas"];

/// Commands that state a goal at theory level.
pub const THEORY_GOALS: &[&str] = &["lemma", "theorem", "corollary", "proposition", "schematic_goal"];

/// Commands that state a goal inside a proof.
pub const PROOF_GOALS: &[&str] = &["have", "show", "thus", "hence", "obtain", "consider"];

/// Commands only valid inside a proof.
pub const PROOF_COMMANDS: &[&str] = &[
    "proof",
    "qed",
    "by",
    "apply",
    "apply_end",
    "done",
    "sorry",
    "oops",
    "..",
    ".",
    "assume",
    "presume",
    "fix",
    "obtain",
    "define",
    "consider",
    "show",
    "have",
    "thus",
    "hence",
    "then",
    "from",
    "with",
    "using",
    "unfolding",
    "note",
    "also",
    "finally",
    "moreover",
    "ultimately",
    "next",
    "let",
    "case",
    "supply",
    "subgoal",
    "prefer",
    "defer",
    "back",
    "txt",
];

/// Commands that close the innermost pending goal outright.
pub const TERMINAL_PROOFS: &[&str] = &["by", "..", ".", "sorry", "done", "oops"];

pub fn is_command(word: &str) -> bool {
    COMMANDS.contains(&word)
}

pub fn is_minor_keyword(word: &str) -> bool {
    MINOR_KEYWORDS.contains(&word) || SYMBOL_KEYWORDS.contains(&word)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_disjoint() {
        for c in COMMANDS {
            assert!(!MINOR_KEYWORDS.contains(c), "{c} is both command and keyword");
            assert!(!METHODS.contains(c), "{c} is both command and method");
        }
        for group in [PROOF_COMMANDS, METHOD_COMMANDS, FACT_COMMANDS, THEORY_GOALS, PROOF_GOALS, TERMINAL_PROOFS] {
            for c in group {
                assert!(is_command(c), "{c} missing from COMMANDS");
            }
        }
    }
}
