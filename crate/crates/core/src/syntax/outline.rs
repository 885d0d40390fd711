//! Command outlining: group tokens into command spans.
//!
//! A command starts at every [`TokenKind::Command`] token and owns all
//! following significant tokens up to the next command. Formulas stay opaque:
//! they are the quoted-string and cartouche tokens among the arguments.

use serde::{Deserialize, Serialize};

use super::diagnostic::{codes, Diagnostic, Layer, Severity};
use super::span::SourceSpan;
use super::token::{Token, TokenKind};
use crate::locale::Locale;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandOutline {
    pub name: String,
    /// From the command keyword to the end of its last argument.
    pub span: SourceSpan,
    pub keyword_span: SourceSpan,
    /// Significant argument tokens (no whitespace, no comments).
    pub arguments: Vec<Token>,
}

pub fn outline(tokens: &[Token]) -> (Vec<CommandOutline>, Vec<Diagnostic>) {
    outline_localized(tokens, Locale::En)
}

pub fn outline_localized(tokens: &[Token], locale: Locale) -> (Vec<CommandOutline>, Vec<Diagnostic>) {
    let mut outlines: Vec<CommandOutline> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut garbage: Option<SourceSpan> = None;

    for token in tokens.iter().filter(|t| !t.kind.is_trivia()) {
        if token.kind == TokenKind::Unknown {
            diagnostics.push(unknown_token(token, locale));
        }
        if token.kind == TokenKind::Command {
            if outlines.is_empty() {
                if let Some(g) = garbage.take() {
                    diagnostics.push(leading_garbage(SourceSpan::new(g.start, token.span.start), locale));
                }
            }
            outlines.push(CommandOutline {
                name: token.text.clone(),
                span: token.span,
                keyword_span: token.span,
                arguments: Vec::new(),
            });
        } else if let Some(current) = outlines.last_mut() {
            current.span = current.span.cover(token.span);
            current.arguments.push(token.clone());
        } else {
            garbage = Some(garbage.map_or(token.span, |g| g.cover(token.span)));
        }
    }
    if let Some(g) = garbage {
        diagnostics.push(leading_garbage(g, locale));
    }
    diagnostics.sort_by_key(|d| (d.span.start, d.span.end));
    (outlines, diagnostics)
}

fn leading_garbage(span: SourceSpan, locale: Locale) -> Diagnostic {
    let message = match locale {
        Locale::En => "text before the first command is not part of any command",
        Locale::De => "Text vor dem ersten Befehl gehört zu keinem Befehl",
    };
    error(span, codes::LEADING_GARBAGE, message)
}

fn unknown_token(token: &Token, locale: Locale) -> Diagnostic {
    let (code, en, de) = if token.text.starts_with('"') {
        (
            codes::UNTERMINATED_STRING,
            "unterminated string: missing closing \"",
            "nicht abgeschlossene Zeichenkette: schließendes \" fehlt",
        )
    } else if token.text.starts_with('‹') {
        (
            codes::UNTERMINATED_CARTOUCHE,
            "unterminated cartouche: missing closing ›",
            "nicht abgeschlossene Kartusche: schließendes › fehlt",
        )
    } else if token.text.starts_with("(*") {
        (
            codes::UNTERMINATED_COMMENT,
            "unterminated comment: missing closing *)",
            "nicht abgeschlossener Kommentar: schließendes *) fehlt",
        )
    } else {
        (codes::UNEXPECTED_CHARACTER, "unexpected character", "unerwartetes Zeichen")
    };
    let message = match locale {
        Locale::En => en.to_string(),
        Locale::De => de.to_string(),
    };
    let message = if code == codes::UNEXPECTED_CHARACTER { format!("{message} `{}`", token.text) } else { message };
    error(token.span, code, &message)
}

fn error(span: SourceSpan, code: &str, message: &str) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        span,
        code: code.to_string(),
        message: message.to_string(),
        layer: Layer::OuterSyntax,
    }
}
