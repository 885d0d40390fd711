//! Tutorials as ordered blocks, theory reconstruction and span mapping.

mod assemble;
mod format;
mod model;
mod validate;

pub use assemble::{assemble_theory, AssembledTheory, MappedOrigin, Segment, SegmentOrigin, SpanOutOfRange, SEPARATOR};
pub use format::{load_tutorial, Solution};
pub use model::{
    reset_progress, Block, BlockBody, BlockKind, Course, Outcome, Section, TheoryHeader, Tutorial, TutorialState,
};
pub use validate::{validate_tutorial, BlockDiagnostic};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TutorialError {
    #[error("{line}:{column}: {message}")]
    Format { line: usize, column: usize, message: String },
    #[error("`{id}`: {message}")]
    Invariant { id: String, message: String },
    #[error("state does not belong to tutorial: {0}")]
    StateMismatch(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
}
