//! Reader for the TOML tutorial authoring format (see `docs/tutorial-format.md`).

use serde::Deserialize;

use super::model::{Block, BlockBody, Section, TheoryHeader, Tutorial, TutorialState};
use super::TutorialError;
use crate::locale::{Locale, Localized};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTutorial {
    id: String,
    title: Localized,
    profile: String,
    header: Option<TheoryHeader>,
    footer: Option<RawFooter>,
    #[serde(default)]
    section: Vec<RawSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFooter {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    #[serde(default)]
    title: Localized,
    #[serde(default)]
    block: Vec<RawBlock>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    id: String,
    kind: String,
    content: Option<Localized>,
    code: Option<String>,
    initial: Option<String>,
}

/// Parse a tutorial document.
///
/// Structural problems (bad TOML, missing header or footer, unknown block
/// kinds, fields that do not belong to a kind) are format errors with a
/// line and column. Duplicate block ids are invariant violations naming the id.
pub fn load_tutorial(document: &str) -> Result<Tutorial, TutorialError> {
    let raw: RawTutorial = toml::from_str(document).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        format_error(document, offset, e.message())
    })?;
    let end = document.len();
    let header = raw.header.ok_or_else(|| format_error(document, end, "missing header"))?;
    let footer = raw.footer.ok_or_else(|| format_error(document, end, "missing footer"))?;
    if !raw.title.contains_key(&Locale::En) {
        return Err(format_error(document, 0, "title.en is required"));
    }

    let mut sections = Vec::with_capacity(raw.section.len());
    for raw_section in raw.section {
        let mut blocks = Vec::with_capacity(raw_section.block.len());
        for b in raw_section.block {
            let at = locate_block(document, &b.id);
            let body = match b.kind.as_str() {
                "text" => {
                    no_fields(document, at, &b.id, &[("code", b.code.is_some()), ("initial", b.initial.is_some())])?;
                    let content = b
                        .content
                        .ok_or_else(|| format_error(document, at, &format!("text block `{}` needs content", b.id)))?;
                    if !content.contains_key(&Locale::En) {
                        return Err(format_error(document, at, &format!("text block `{}` needs content.en", b.id)));
                    }
                    BlockBody::Text { content }
                }
                "example" | "hidden" => {
                    no_fields(
                        document,
                        at,
                        &b.id,
                        &[("content", b.content.is_some()), ("initial", b.initial.is_some())],
                    )?;
                    let code = b.code.ok_or_else(|| {
                        format_error(document, at, &format!("{} block `{}` needs code", b.kind, b.id))
                    })?;
                    let code = trim_trailing_newlines(code);
                    if b.kind == "example" {
                        BlockBody::Example { code }
                    } else {
                        BlockBody::Hidden { code }
                    }
                }
                "task" => {
                    no_fields(document, at, &b.id, &[("content", b.content.is_some()), ("code", b.code.is_some())])?;
                    BlockBody::Task { initial: trim_trailing_newlines(b.initial.unwrap_or_default()) }
                }
                other => {
                    return Err(format_error(document, at, &format!("unknown block kind `{other}`")));
                }
            };
            blocks.push(Block { id: b.id, body });
        }
        sections.push(Section { title: raw_section.title, blocks });
    }

    let tutorial = Tutorial {
        id: raw.id,
        title: raw.title,
        profile: raw.profile,
        header,
        footer: trim_trailing_newlines(footer.text),
        sections,
    };
    if let Some(id) = tutorial.duplicate_block_ids().into_iter().next() {
        return Err(TutorialError::Invariant { id, message: "duplicate block id".into() });
    }
    Ok(tutorial)
}

/// A set of task contents for one tutorial, used for reference solutions
/// and test fixtures.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub tutorial: String,
    pub blocks: std::collections::BTreeMap<String, String>,
}

impl Solution {
    pub fn parse(document: &str) -> Result<Self, TutorialError> {
        toml::from_str(document).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            format_error(document, offset, e.message())
        })
    }

    /// A fresh state for `tutorial` with these contents filled in.
    pub fn state(&self, user_id: &str, tutorial: &Tutorial) -> Result<TutorialState, TutorialError> {
        if self.tutorial != tutorial.id {
            return Err(TutorialError::StateMismatch(format!(
                "solution is for `{}`, not `{}`",
                self.tutorial, tutorial.id
            )));
        }
        let mut state = TutorialState::fresh(user_id, tutorial);
        for (id, content) in &self.blocks {
            state.set_content(id, content.clone())?;
        }
        Ok(state)
    }
}

fn trim_trailing_newlines(mut s: String) -> String {
    while s.ends_with('\n') || s.ends_with('\r') {
        s.pop();
    }
    s
}

fn no_fields(document: &str, at: usize, id: &str, fields: &[(&str, bool)]) -> Result<(), TutorialError> {
    match fields.iter().find(|(_, present)| *present) {
        Some((name, _)) => Err(format_error(document, at, &format!("block `{id}` does not take `{name}`"))),
        None => Ok(()),
    }
}

/// Best-effort position of a block's id assignment, for error locations.
fn locate_block(document: &str, id: &str) -> usize {
    let needle = format!("\"{id}\"");
    document
        .match_indices(&needle)
        .map(|(i, _)| i)
        .find(|&i| document[..i].trim_end().ends_with('=') && line_of(document, i).trim_start().starts_with("id"))
        .unwrap_or(0)
}

fn line_of(document: &str, offset: usize) -> &str {
    let start = document[..offset].rfind('\n').map_or(0, |i| i + 1);
    let end = document[offset..].find('\n').map_or(document.len(), |i| offset + i);
    &document[start..end]
}

fn format_error(document: &str, offset: usize, message: &str) -> TutorialError {
    let offset = offset.min(document.len());
    let before = &document[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    TutorialError::Format { line, column, message: message.trim().to_string() }
}
