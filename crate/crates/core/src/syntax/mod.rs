//! Outer-syntax analysis that runs without any prover: lexing, command
//! outlining, restriction checks, symbols and completion.

mod complete;
mod diagnostic;
pub mod keywords;
mod outline;
mod profile;
mod restrict;
mod span;
mod symbols;
mod token;

pub use complete::{complete, complete_with, Completion, CompletionKind};
pub use diagnostic::{codes, Diagnostic, Layer, Severity};
pub use outline::{outline, outline_localized, CommandOutline};
pub use profile::{default_templates, OperatorPattern, ProfileError, RestrictionKind, SyntaxProfile};
pub use restrict::{check_restrictions, check_restrictions_localized};
pub use span::SourceSpan;
pub use symbols::{lookup_symbol, SymbolEntry, SymbolTable, SymbolTableError};
pub use token::{tokenize, tokenize_with, Token, TokenKind};

use crate::locale::Locale;

/// Outline and restriction diagnostics for one document, ordered by offset.
pub fn analyze(document: &str, profile: &SyntaxProfile, locale: Locale) -> Vec<Diagnostic> {
    let tokens = tokenize(document);
    let (outlines, mut diagnostics) = outline_localized(&tokens, locale);
    diagnostics.extend(check_restrictions_localized(&outlines, profile, locale));
    diagnostics.sort_by_key(|d| (d.span.start, d.span.end));
    diagnostics
}
