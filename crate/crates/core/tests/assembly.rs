//! Theory assembly and span mapping against a naive string-join oracle.

use proofbench_core::syntax::SourceSpan;
use proofbench_core::tutorial::{
    assemble_theory, reset_progress, Block, BlockBody, MappedOrigin, Section, TheoryHeader, Tutorial, TutorialState,
};
use proofbench_core::Locale;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Piece {
    start: usize,
    end: usize,
    /// `None` for hidden material.
    block: Option<String>,
}

/// Pieces in order, without separators, built by plain joining.
fn oracle(t: &Tutorial, s: &TutorialState) -> (String, Vec<Piece>) {
    let mut parts: Vec<(String, Option<String>)> =
        vec![(format!("theory {} imports {} begin", t.header.theory, t.header.imports), None)];
    for sec in &t.sections {
        for b in &sec.blocks {
            match &b.body {
                BlockBody::Text { .. } => {}
                BlockBody::Example { code } => parts.push((code.clone(), Some(b.id.clone()))),
                BlockBody::Hidden { code } => parts.push((code.clone(), None)),
                BlockBody::Task { .. } => parts.push((s.contents[&b.id].clone(), Some(b.id.clone()))),
            }
        }
    }
    parts.push((t.footer.clone(), None));
    let text = parts.iter().map(|(p, _)| p.as_str()).collect::<Vec<_>>().join("\n");
    let mut pieces = Vec::new();
    let mut at = 0;
    for (p, block) in parts {
        pieces.push(Piece { start: at, end: at + p.len(), block });
        at += p.len() + 1;
    }
    (text, pieces)
}

fn code() -> impl Strategy<Value = String> {
    "[a-z ∧⟶\"\n]{0,12}".prop_map(|s| s.trim_end_matches('\n').to_string())
}

fn body() -> impl Strategy<Value = BlockBody> {
    prop_oneof![
        Just(BlockBody::Text { content: [(Locale::En, "text".to_string())].into() }),
        code().prop_map(|code| BlockBody::Example { code }),
        code().prop_map(|initial| BlockBody::Task { initial }),
        code().prop_map(|code| BlockBody::Hidden { code }),
    ]
}

fn tutorial_and_state() -> impl Strategy<Value = (Tutorial, TutorialState)> {
    let sections = proptest::collection::vec(proptest::collection::vec(body(), 0..5), 1..4);
    (sections, code(), proptest::collection::vec(code(), 20)).prop_map(|(sections, footer, edits)| {
        let mut n = 0;
        let sections = sections
            .into_iter()
            .map(|bodies| Section {
                title: Default::default(),
                blocks: bodies
                    .into_iter()
                    .map(|body| {
                        n += 1;
                        Block { id: format!("b{n}"), body }
                    })
                    .collect(),
            })
            .collect();
        let t = Tutorial {
            id: "t".into(),
            title: [(Locale::En, "T".to_string())].into(),
            profile: "p".into(),
            header: TheoryHeader { theory: "T".into(), imports: "Main".into() },
            footer: format!("end{footer}"),
            sections,
        };
        let mut s = TutorialState::fresh("u", &t);
        let ids: Vec<String> = s.contents.keys().cloned().collect();
        for (id, edit) in ids.iter().zip(edits) {
            s.set_content(id, edit).unwrap();
        }
        (t, s)
    })
}

fn expected(piece: &Piece, local: SourceSpan, multi: bool) -> MappedOrigin {
    match &piece.block {
        Some(id) => MappedOrigin::Block { block_id: id.clone(), span: local, multi_segment: multi },
        None => MappedOrigin::Hidden,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn every_offset_maps_to_one_origin((t, s) in tutorial_and_state()) {
        let a = assemble_theory(&t, &s).unwrap();
        let (text, pieces) = oracle(&t, &s);
        prop_assert_eq!(&a.text, &text);

        // Segments partition the text.
        let mut at = 0;
        for seg in &a.segments {
            prop_assert_eq!(seg.span.start, at);
            at = seg.span.end;
        }
        prop_assert_eq!(at, text.len());

        for (id, content) in &s.contents {
            prop_assert_eq!(a.block_segment(id).unwrap().span.slice(&a.text), content.as_str());
        }

        for (o, c) in text.char_indices() {
            // A one-character span sits in exactly one piece or in the
            // separator that follows a piece.
            let owners: Vec<&Piece> = pieces.iter().filter(|p| p.start <= o && o < p.end).collect();
            let piece = match owners.as_slice() {
                [p] => *p,
                [] => pieces.iter().find(|p| p.end == o).unwrap(),
                _ => panic!("overlapping pieces"),
            };
            let local = SourceSpan::new(o.min(piece.end) - piece.start, (o + c.len_utf8()).min(piece.end) - piece.start);
            prop_assert_eq!(a.map_span(SourceSpan::new(o, o + c.len_utf8())).unwrap(), expected(piece, local, false));
        }
        for o in (0..=text.len()).filter(|&o| text.is_char_boundary(o)) {
            // Zero-length spans go to the piece that contains or ends at them.
            let piece = pieces.iter().find(|p| p.start <= o && o <= p.end).unwrap();
            prop_assert_eq!(a.map_span(SourceSpan::empty(o)).unwrap(), expected(piece, SourceSpan::empty(o - piece.start), false));
        }
        prop_assert!(a.map_span(SourceSpan::new(0, text.len() + 1)).is_err());
    }

    #[test]
    fn reset_is_idempotent_and_fresh((t, s) in tutorial_and_state()) {
        let once = reset_progress(&s, &t).unwrap();
        prop_assert_eq!(&reset_progress(&once, &t).unwrap(), &once);
        prop_assert_eq!(assemble_theory(&t, &once).unwrap(), assemble_theory(&t, &TutorialState::fresh("u", &t)).unwrap());
    }

    #[test]
    fn edits_do_not_move_earlier_origins((t, s) in tutorial_and_state(), new in code()) {
        let Some(last) = s.contents.keys().last().cloned() else { return Ok(()) };
        let before = assemble_theory(&t, &s).unwrap();
        let mut edited = s.clone();
        edited.set_content(&last, new).unwrap();
        let after = assemble_theory(&t, &edited).unwrap();
        let boundary = before.block_segment(&last).unwrap().span.start;
        for o in (0..boundary).filter(|&o| before.text.is_char_boundary(o)) {
            prop_assert_eq!(before.map_span(SourceSpan::empty(o)).unwrap(), after.map_span(SourceSpan::empty(o)).unwrap());
        }
    }
}

#[test]
fn straddling_two_visible_blocks_is_clipped() {
    let t = Tutorial {
        id: "t".into(),
        title: [(Locale::En, "T".to_string())].into(),
        profile: "p".into(),
        header: TheoryHeader { theory: "T".into(), imports: "Main".into() },
        footer: "end".into(),
        sections: vec![Section {
            title: Default::default(),
            blocks: vec![
                Block { id: "a".into(), body: BlockBody::Task { initial: "abc".into() } },
                Block { id: "b".into(), body: BlockBody::Task { initial: "def".into() } },
            ],
        }],
    };
    let a = assemble_theory(&t, &TutorialState::fresh("u", &t)).unwrap();
    let start = a.text.find("bc").unwrap();
    let end = a.text.find("ef").unwrap();
    assert_eq!(
        a.map_span(SourceSpan::new(start, end)).unwrap(),
        MappedOrigin::Block { block_id: "a".into(), span: SourceSpan::new(1, 3), multi_segment: true }
    );
}

mod fixtures {
    use std::path::PathBuf;

    use proofbench_core::syntax::SyntaxProfile;
    use proofbench_core::tutorial::{load_tutorial, validate_tutorial, BlockKind, Solution};

    fn repo() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
    }

    fn read(rel: &str) -> String {
        std::fs::read_to_string(repo().join(rel)).unwrap()
    }

    #[test]
    fn bundled_tutorials_are_valid() {
        for (file, profile) in [
            ("tutorials/conjunction.toml", "tutorials/profiles/no-automation.toml"),
            ("tutorials/first-order.toml", "tutorials/profiles/no-automation.toml"),
            ("tutorials/lists.toml", "tutorials/profiles/induction.toml"),
        ] {
            let t = load_tutorial(&read(file)).unwrap();
            let p = SyntaxProfile::from_toml(&read(profile)).unwrap();
            assert_eq!(t.profile, p.id);
            assert_eq!(validate_tutorial(&t, &p), vec![], "{file}");
        }
    }

    #[test]
    fn conjunction_has_three_sections_and_five_tasks() {
        let t = load_tutorial(&read("tutorials/conjunction.toml")).unwrap();
        assert_eq!(t.sections.len(), 3);
        assert_eq!(t.task_blocks().count(), 5);
        let hidden = t.blocks().find(|b| b.kind() == BlockKind::Hidden).unwrap();
        let catalog = proofbench_core::feedback::RuleCatalog::bundled();
        assert_eq!(hidden.fixed_code(), Some(catalog.alias_declarations().as_str()));
    }

    #[test]
    fn bundled_solutions_fill_every_task() {
        let t = load_tutorial(&read("tutorials/conjunction.toml")).unwrap();
        for file in ["tutorials/solutions/conjunction.correct.toml", "tutorials/solutions/conjunction.broken.toml"] {
            let s = Solution::parse(&read(file)).unwrap();
            assert_eq!(s.blocks.keys().cloned().collect::<std::collections::BTreeSet<_>>(), t.task_ids());
            s.state("u", &t).unwrap();
        }
    }
}
