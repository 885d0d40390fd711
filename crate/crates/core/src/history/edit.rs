//! Character-based edit scripts.
//!
//! Counts are in Unicode scalar values, not bytes, so a script never splits
//! a multi-byte character.

use serde::{Deserialize, Serialize};
use similar::{capture_diff_slices, Algorithm, DiffOp};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Retain(usize),
    Insert(String),
    Delete(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("edit script reads past the end of the text ({needed} > {available} characters)")]
    PastEnd { needed: usize, available: usize },
    #[error("edit script leaves {0} characters unconsumed")]
    Unconsumed(usize),
}

/// An edit script turning `old` into `new`. Adjacent operations of the same
/// kind are merged and zero-length operations are omitted, so identical
/// inputs give `[Retain(n)]` (or `[]` when both are empty).
pub fn diff(old: &str, new: &str) -> Vec<EditOp> {
    let a: Vec<char> = old.chars().collect();
    let b: Vec<char> = new.chars().collect();
    let mut out = Vec::new();
    for op in capture_diff_slices(Algorithm::Myers, &a, &b) {
        match op {
            DiffOp::Equal { len, .. } => push(&mut out, EditOp::Retain(len)),
            DiffOp::Delete { old_len, .. } => push(&mut out, EditOp::Delete(old_len)),
            DiffOp::Insert { new_index, new_len, .. } => {
                push(&mut out, EditOp::Insert(b[new_index..new_index + new_len].iter().collect()))
            }
            DiffOp::Replace { old_len, new_index, new_len, .. } => {
                push(&mut out, EditOp::Delete(old_len));
                push(&mut out, EditOp::Insert(b[new_index..new_index + new_len].iter().collect()));
            }
        }
    }
    out
}

fn push(ops: &mut Vec<EditOp>, op: EditOp) {
    match (ops.last_mut(), op) {
        (_, EditOp::Retain(0) | EditOp::Delete(0)) => {}
        (_, EditOp::Insert(s)) if s.is_empty() => {}
        (Some(EditOp::Retain(n)), EditOp::Retain(m)) => *n += m,
        (Some(EditOp::Delete(n)), EditOp::Delete(m)) => *n += m,
        (Some(EditOp::Insert(s)), EditOp::Insert(t)) => s.push_str(&t),
        (_, op) => ops.push(op),
    }
}

/// Apply `ops` to `text`. The script must consume the whole input.
pub fn apply(text: &str, ops: &[EditOp]) -> Result<String, ApplyError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = String::with_capacity(text.len());
    for op in ops {
        match op {
            EditOp::Retain(n) | EditOp::Delete(n) => {
                let end = pos + n;
                if end > chars.len() {
                    return Err(ApplyError::PastEnd { needed: end, available: chars.len() });
                }
                if matches!(op, EditOp::Retain(_)) {
                    out.extend(&chars[pos..end]);
                }
                pos = end;
            }
            EditOp::Insert(s) => out.push_str(s),
        }
    }
    if pos != chars.len() {
        return Err(ApplyError::Unconsumed(chars.len() - pos));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_submission_is_one_insert() {
        assert_eq!(diff("", "lemma l: \"A\""), [EditOp::Insert("lemma l: \"A\"".into())]);
    }

    #[test]
    fn one_word_changed() {
        let ops = diff("by (rule impI)", "by (rule conjI)");
        assert!(matches!(ops.first(), Some(EditOp::Retain(_))));
        assert!(matches!(ops.last(), Some(EditOp::Retain(_))));
        assert!(ops.iter().any(|o| matches!(o, EditOp::Delete(_))));
        assert!(ops.iter().any(|o| matches!(o, EditOp::Insert(_))));
        assert_eq!(apply("by (rule impI)", &ops).unwrap(), "by (rule conjI)");
    }

    #[test]
    fn counts_are_characters() {
        let ops = diff("A ∧ B", "A ∨ B");
        assert_eq!(ops, [EditOp::Retain(2), EditOp::Delete(1), EditOp::Insert("∨".into()), EditOp::Retain(2)]);
    }

    #[test]
    fn json_shape() {
        let ops = vec![EditOp::Retain(3), EditOp::Insert("x".into()), EditOp::Delete(2)];
        assert_eq!(serde_json::to_string(&ops).unwrap(), r#"[{"retain":3},{"insert":"x"},{"delete":2}]"#);
    }

    #[test]
    fn malformed_scripts_are_rejected() {
        assert_eq!(apply("ab", &[EditOp::Retain(3)]), Err(ApplyError::PastEnd { needed: 3, available: 2 }));
        assert_eq!(apply("ab", &[EditOp::Retain(1)]), Err(ApplyError::Unconsumed(1)));
    }

    proptest! {
        #[test]
        fn round_trip(a in "[a-c ∧∨\n]{0,40}", b in "[a-c ∧∨\n]{0,40}") {
            prop_assert_eq!(apply(&a, &diff(&a, &b)).unwrap(), b);
        }
    }
}
