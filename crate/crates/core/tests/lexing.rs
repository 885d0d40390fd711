use proofbench_core::syntax::{keywords, outline, tokenize, SourceSpan, TokenKind};
use proptest::prelude::*;

const FRAGMENTS: &[&str] = &[
    "lemma",
    "theorem",
    "proof",
    "qed",
    "by",
    "apply",
    "done",
    "assume",
    "show",
    "have",
    "from",
    "fix",
    "then",
    "next",
    "fun",
    "datatype",
    "where",
    "and",
    "::",
    "..",
    ".",
    "(rule conjI)",
    "auto",
    "simp",
    "\"A ∧ B\"",
    "\"unterminated",
    "‹cart ‹nested››",
    "‹open",
    "(* c *)",
    "(* (* n *) *)",
    "(* open",
    "?x",
    "?x.1",
    "'a",
    "?'b",
    "123",
    "HOL.conjI",
    "\\<and>",
    "\\<alpha>x",
    "\\<broken",
    "∧",
    "⟶",
    "==>",
    "-->",
    "/\\",
    "|",
    "[",
    "]",
    "(",
    ")",
    ",",
    ";",
    ":",
    "›",
    "§",
    "\t",
    "\n",
    " ",
    "x\\<^sub>1",
];

fn isar_noise() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        3 => proptest::sample::select(FRAGMENTS).prop_map(str::to_string),
        1 => any::<char>().prop_map(|c| c.to_string()),
        1 => "[ -~]{1,4}",
    ];
    proptest::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

fn is_boundary_valid(span: SourceSpan, doc: &str) -> bool {
    span.start <= span.end
        && span.end <= doc.len()
        && doc.is_char_boundary(span.start)
        && doc.is_char_boundary(span.end)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tokens_reproduce_input(doc in isar_noise()) {
        let tokens = tokenize(&doc);
        let joined: String = tokens.iter().map(|t| t.text.as_str()).collect();
        prop_assert_eq!(&joined, &doc);
        let mut at = 0;
        for t in &tokens {
            prop_assert_eq!(t.span.start, at);
            prop_assert!(is_boundary_valid(t.span, &doc));
            prop_assert_eq!(&doc[t.span.range()], t.text.as_str());
            prop_assert!(!t.text.is_empty());
            at = t.span.end;
        }
        prop_assert_eq!(at, doc.len());
    }

    #[test]
    fn arbitrary_unicode_is_lossless(doc in any::<String>()) {
        let joined: String = tokenize(&doc).iter().map(|t| t.text.as_str()).collect();
        prop_assert_eq!(joined, doc);
    }

    #[test]
    fn pure_and_deterministic(doc in isar_noise()) {
        prop_assert_eq!(tokenize(&doc), tokenize(&doc));
        let tokens = tokenize(&doc);
        prop_assert_eq!(outline(&tokens), outline(&tokens));
    }

    #[test]
    fn strings_and_cartouches_are_delimited(doc in isar_noise()) {
        for t in tokenize(&doc) {
            match t.kind {
                TokenKind::QuotedString => prop_assert!(t.text.len() >= 2 && t.text.starts_with('"') && t.text.ends_with('"')),
                TokenKind::Cartouche => {
                    prop_assert!(t.text.starts_with('‹') && t.text.ends_with('›'));
                    let depth = t.text.chars().try_fold(0i32, |d, c| {
                        let d = d + (c == '‹') as i32 - (c == '›') as i32;
                        (d >= 0).then_some(d)
                    });
                    prop_assert_eq!(depth, Some(0));
                }
                _ => {}
            }
        }
    }

    /// Every significant token is owned by exactly one outline or lies in
    /// the reported leading-garbage region.
    #[test]
    fn outline_partitions_significant_tokens(doc in isar_noise()) {
        let tokens = tokenize(&doc);
        let (outlines, diagnostics) = outline(&tokens);
        for pair in outlines.windows(2) {
            prop_assert!(pair[0].span.end <= pair[1].span.start);
        }
        for o in &outlines {
            prop_assert!(is_boundary_valid(o.span, &doc));
            prop_assert!(keywords::is_command(&o.name));
        }
        for d in &diagnostics {
            prop_assert!(is_boundary_valid(d.span, &doc));
        }
        let garbage = diagnostics.iter().find(|d| d.code == "leading-garbage").map(|d| d.span);
        for t in tokens.iter().filter(|t| !t.kind.is_trivia()) {
            let owners = outlines.iter().filter(|o| o.span.start <= t.span.start && t.span.end <= o.span.end).count();
            let in_garbage = garbage.is_some_and(|g| g.start <= t.span.start && t.span.end <= g.end);
            prop_assert_eq!(owners + in_garbage as usize, 1, "token {:?}", t);
        }
    }
}

#[test]
fn spec_examples() {
    assert!(tokenize("").is_empty());
    let kinds: Vec<_> = tokenize("lemma foo: \"A\"").into_iter().map(|t| (t.kind, t.text)).collect();
    assert_eq!(
        kinds,
        [
            (TokenKind::Command, "lemma".to_string()),
            (TokenKind::Whitespace, " ".into()),
            (TokenKind::Identifier, "foo".into()),
            (TokenKind::Punctuation, ":".into()),
            (TokenKind::Whitespace, " ".into()),
            (TokenKind::QuotedString, "\"A\"".into()),
        ]
    );
    let (outlines, diags) = outline(&tokenize("\"A\" lemma l: \"A\""));
    assert_eq!(outlines.len(), 1);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].span, SourceSpan::new(0, 4));
}
