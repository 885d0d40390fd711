//! Reconstruction of the full theory from a tutorial and one user's state,
//! and the mapping of theory offsets back to blocks.
//!
//! The theory is `header`, the code of every non-text block in section
//! order, and `footer`, joined by exactly one `\n`. Each piece and each
//! separator is a segment of the span map, so the segments tile the text.

use serde::{Deserialize, Serialize};

use super::model::{BlockBody, BlockKind, Tutorial, TutorialState};
use super::TutorialError;
use crate::syntax::SourceSpan;

pub const SEPARATOR: &str = "\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "kebab-case")]
pub enum SegmentOrigin {
    Header,
    Footer,
    Block {
        block_id: String,
        kind: BlockKind,
    },
    /// The newline between two pieces; it belongs to the preceding piece.
    Separator,
}

impl SegmentOrigin {
    pub fn is_hidden(&self) -> bool {
        matches!(
            self,
            SegmentOrigin::Header | SegmentOrigin::Footer | SegmentOrigin::Block { kind: BlockKind::Hidden, .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub span: SourceSpan,
    pub origin: SegmentOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledTheory {
    pub text: String,
    pub segments: Vec<Segment>,
}

/// Where a theory span came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "kebab-case")]
pub enum MappedOrigin {
    /// Inside a visible block; `span` is relative to the block's content.
    /// `multi_segment` is set when the original span reached into later
    /// visible blocks and was clipped to the first.
    Block { block_id: String, span: SourceSpan, multi_segment: bool },
    /// Touches hidden material; reported at tutorial level.
    Hidden,
}

pub fn assemble_theory(tutorial: &Tutorial, state: &TutorialState) -> Result<AssembledTheory, TutorialError> {
    state.check_belongs_to(tutorial)?;
    let header = tutorial.header.text();
    let mut pieces: Vec<(&str, SegmentOrigin)> = vec![(&header, SegmentOrigin::Header)];
    for block in tutorial.blocks() {
        let text = match &block.body {
            BlockBody::Text { .. } => continue,
            BlockBody::Example { code } | BlockBody::Hidden { code } => code.as_str(),
            BlockBody::Task { .. } => state.contents[&block.id].as_str(),
        };
        pieces.push((text, SegmentOrigin::Block { block_id: block.id.clone(), kind: block.kind() }));
    }
    pieces.push((&tutorial.footer, SegmentOrigin::Footer));

    let mut text = String::new();
    let mut segments = Vec::with_capacity(pieces.len() * 2);
    for (i, (piece, origin)) in pieces.into_iter().enumerate() {
        if i > 0 {
            let start = text.len();
            text.push_str(SEPARATOR);
            segments.push(Segment { span: SourceSpan::new(start, text.len()), origin: SegmentOrigin::Separator });
        }
        let start = text.len();
        text.push_str(piece);
        segments.push(Segment { span: SourceSpan::new(start, text.len()), origin });
    }
    Ok(AssembledTheory { text, segments })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("span {start}..{end} is outside the theory (length {len})")]
pub struct SpanOutOfRange {
    pub start: usize,
    pub end: usize,
    pub len: usize,
}

impl AssembledTheory {
    pub fn block_segment(&self, block_id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| matches!(&s.origin, SegmentOrigin::Block { block_id: id, .. } if id == block_id))
    }

    /// Index of the piece that owns segment `idx`: separators resolve to the
    /// piece before them.
    fn owner(&self, idx: usize) -> usize {
        if self.segments[idx].origin == SegmentOrigin::Separator {
            idx - 1
        } else {
            idx
        }
    }

    fn resolve(&self, owner: usize, local: SourceSpan, multi_segment: bool) -> MappedOrigin {
        let seg = &self.segments[owner];
        match &seg.origin {
            SegmentOrigin::Block { block_id, kind } if *kind != BlockKind::Hidden => {
                MappedOrigin::Block { block_id: block_id.clone(), span: local, multi_segment }
            }
            _ => MappedOrigin::Hidden,
        }
    }

    /// Map a theory span to its originating block.
    ///
    /// A zero-length span at a boundary belongs to the segment that starts
    /// there. Spans inside a separator stick to the end of the preceding
    /// piece. Any span touching hidden material maps to [`MappedOrigin::Hidden`].
    pub fn map_span(&self, span: SourceSpan) -> Result<MappedOrigin, SpanOutOfRange> {
        let len = self.text.len();
        if span.start > span.end || span.end > len {
            return Err(SpanOutOfRange { start: span.start, end: span.end, len });
        }
        if span.is_empty() {
            let idx = self.segments.partition_point(|s| s.span.end <= span.start).min(self.segments.len() - 1);
            let owner = self.owner(idx);
            let seg = self.segments[owner].span;
            let local = span.start.min(seg.end) - seg.start;
            return Ok(self.resolve(owner, SourceSpan::empty(local), false));
        }

        let first = self.segments.partition_point(|s| s.span.end <= span.start);
        let mut owners: Vec<usize> = Vec::new();
        for idx in first..self.segments.len() {
            if self.segments[idx].span.start >= span.end {
                break;
            }
            let owner = self.owner(idx);
            if owners.last() != Some(&owner) {
                owners.push(owner);
            }
        }
        if owners.iter().any(|&o| self.segments[o].origin.is_hidden()) {
            return Ok(MappedOrigin::Hidden);
        }
        let owner = owners[0];
        let seg = self.segments[owner].span;
        let start = span.start.clamp(seg.start, seg.end);
        let end = span.end.clamp(seg.start, seg.end);
        Ok(self.resolve(owner, SourceSpan::new(start - seg.start, end - seg.start), owners.len() > 1))
    }
}
