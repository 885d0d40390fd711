use serde::{Deserialize, Serialize};

use super::model::{BlockBody, Tutorial};
use crate::locale::Locale;
use crate::syntax::{
    check_restrictions_localized, outline_localized, tokenize, Diagnostic, Layer, Severity, SourceSpan, SyntaxProfile,
};

/// A finding about one block; `block_id` is `None` for the header and footer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDiagnostic {
    pub block_id: Option<String>,
    #[serde(flatten)]
    pub diagnostic: Diagnostic,
}

/// Authoring checks: initial task content must satisfy the profile, fixed
/// code must outline cleanly, and block ids must be unique.
pub fn validate_tutorial(tutorial: &Tutorial, profile: &SyntaxProfile) -> Vec<BlockDiagnostic> {
    let locale = Locale::En;
    let mut out = Vec::new();
    for id in tutorial.duplicate_block_ids() {
        out.push(BlockDiagnostic {
            block_id: Some(id.clone()),
            diagnostic: Diagnostic {
                severity: Severity::Error,
                span: SourceSpan::empty(0),
                code: "duplicate-block-id".into(),
                message: format!("block id `{id}` is used more than once"),
                layer: Layer::OuterSyntax,
            },
        });
    }

    let outline_only = |block_id: Option<&str>, code: &str, out: &mut Vec<BlockDiagnostic>| {
        let (_, diags) = outline_localized(&tokenize(code), locale);
        out.extend(diags.into_iter().map(|d| BlockDiagnostic { block_id: block_id.map(String::from), diagnostic: d }));
    };
    outline_only(None, &tutorial.header.text(), &mut out);
    for block in tutorial.blocks() {
        match &block.body {
            BlockBody::Text { .. } => {}
            BlockBody::Example { code } | BlockBody::Hidden { code } => outline_only(Some(&block.id), code, &mut out),
            BlockBody::Task { initial } => {
                let (outlines, mut diags) = outline_localized(&tokenize(initial), locale);
                diags.extend(check_restrictions_localized(&outlines, profile, locale));
                diags.sort_by_key(|d| (d.span.start, d.span.end));
                out.extend(
                    diags.into_iter().map(|d| BlockDiagnostic { block_id: Some(block.id.clone()), diagnostic: d }),
                );
            }
        }
    }
    outline_only(None, &tutorial.footer, &mut out);
    out
}
