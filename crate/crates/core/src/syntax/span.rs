use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Half-open byte range `[start, end)` into a UTF-8 document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} after end {end}");
        Self { start, end }
    }

    pub fn empty(at: usize) -> Self {
        Self { start: at, end: at }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// Smallest span covering both.
    pub fn cover(&self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn shift(&self, delta: usize) -> SourceSpan {
        SourceSpan::new(self.start + delta, self.end + delta)
    }

    /// Whether the span is ordered, in bounds and on character boundaries of `doc`.
    pub fn is_valid_in(&self, doc: &str) -> bool {
        self.start <= self.end
            && self.end <= doc.len()
            && doc.is_char_boundary(self.start)
            && doc.is_char_boundary(self.end)
    }

    pub fn slice<'a>(&self, doc: &'a str) -> &'a str {
        &doc[self.range()]
    }
}

impl From<Range<usize>> for SourceSpan {
    fn from(r: Range<usize>) -> Self {
        SourceSpan::new(r.start, r.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_respects_char_boundaries() {
        let doc = "a∧b";
        assert!(SourceSpan::new(0, 1).is_valid_in(doc));
        assert!(SourceSpan::new(1, 4).is_valid_in(doc));
        assert!(!SourceSpan::new(1, 2).is_valid_in(doc));
        assert!(!SourceSpan::new(0, 6).is_valid_in(doc));
    }

    #[test]
    fn cover_and_shift() {
        let a = SourceSpan::new(2, 4);
        assert_eq!(a.cover(SourceSpan::new(6, 9)), SourceSpan::new(2, 9));
        assert_eq!(a.shift(10), SourceSpan::new(12, 14));
        assert!(a.contains(3) && !a.contains(4));
    }
}
