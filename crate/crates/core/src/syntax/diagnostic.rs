use serde::{Deserialize, Serialize};

use super::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// Which analysis produced a diagnostic. `Prover` findings only ever come
/// from feedback enrichment, never from the syntax layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    OuterSyntax,
    Restriction,
    Prover,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub code: String,
    pub message: String,
    pub layer: Layer,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Stable machine codes emitted by the outliner.
pub mod codes {
    pub const LEADING_GARBAGE: &str = "leading-garbage";
    pub const UNTERMINATED_STRING: &str = "unterminated-string";
    pub const UNTERMINATED_CARTOUCHE: &str = "unterminated-cartouche";
    pub const UNTERMINATED_COMMENT: &str = "unterminated-comment";
    pub const UNEXPECTED_CHARACTER: &str = "unexpected-character";
}
