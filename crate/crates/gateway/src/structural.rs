//! Structural checking used by the mock prover.
//!
//! Rules, applied to the outline of the submitted theory:
//!
//! 1. Outer-syntax problems (leading garbage, unterminated text) and
//!    unknown characters are errors at their span.
//! 2. The theory must open with `theory … begin` and close with `end`.
//! 3. Goal statements open a goal; `proof` turns the pending goal into a
//!    block; `qed` closes the innermost block; terminal proofs (`by`, `..`,
//!    `.`, `sorry`, `done`, `oops`) close the pending goal; `apply` needs a
//!    pending goal; other proof commands need an open proof.
//! 4. When a proof is left open, each unclosed block is one error at its
//!    `proof` keyword. Only if no block is open are pending goals reported,
//!    one error each at the goal's keyword.
//! 5. A forbidden method name in a method position is an error at the name.
//! 6. `sorry` is accepted with a warning.
//!
//! Every goal statement yields a proof state right after the statement.

use std::collections::BTreeSet;

use proofbench_core::prover::{MessageSeverity, ProofState, ProverMessage, ProverResult};
use proofbench_core::syntax::{keywords, outline, tokenize, CommandOutline, SourceSpan, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    Goal(SourceSpan),
    Block(SourceSpan),
}

struct Checker<'a> {
    text: &'a str,
    forbidden: &'a BTreeSet<String>,
    stack: Vec<Frame>,
    messages: Vec<ProverMessage>,
    states: Vec<ProofState>,
}

pub const UNFINISHED_GOAL: &str = "Failed to finish proof⌂: unfinished goal";
pub const UNCLOSED_BLOCK: &str = "Proof block is not closed (missing qed)";
pub const QED_WITHOUT_PROOF: &str = "qed without matching proof";
pub const NO_GOAL: &str = "Illegal application of proof command: no pending goal";
pub const THEORY_MODE: &str = "Illegal application of proof command in theory mode";

pub fn forbidden_method_text(name: &str) -> String {
    format!("Method \"{name}\" is not available in this environment")
}

pub fn check(text: &str, forbidden: &BTreeSet<String>) -> ProverResult {
    let mut c = Checker { text, forbidden, stack: Vec::new(), messages: Vec::new(), states: Vec::new() };
    c.run();
    c.messages.sort_by_key(|m| (m.span.start, m.span.end));
    ProverResult::finished(c.messages, c.states)
}

impl Checker<'_> {
    fn error(&mut self, span: SourceSpan, text: impl Into<String>) {
        self.messages.push(ProverMessage { severity: MessageSeverity::Error, span, text: text.into() });
    }

    fn warning(&mut self, span: SourceSpan, text: impl Into<String>) {
        self.messages.push(ProverMessage { severity: MessageSeverity::Warning, span, text: text.into() });
    }

    fn run(&mut self) {
        let tokens = tokenize(self.text);
        let (outlines, diagnostics) = outline(&tokens);
        for d in &diagnostics {
            self.error(d.span, format!("Outer syntax error⌂: {}", d.message));
        }
        for t in &tokens {
            if t.kind == TokenKind::Unknown && !diagnostics.iter().any(|d| d.span.contains(t.span.start)) {
                self.error(t.span, format!("Outer syntax error⌂: bad input \"{}\"", t.text));
            }
        }

        let Some(first) = outlines.first() else {
            self.error(SourceSpan::empty(self.text.len()), "Bad theory header: empty theory");
            return;
        };
        if first.name != "theory" || !first.arguments.iter().any(|t| t.text == "begin") {
            self.error(first.keyword_span, "Bad theory header: expected \"theory NAME imports … begin\"");
        }
        let body_end = match outlines.last() {
            Some(last) if last.name == "end" && outlines.len() > 1 => outlines.len() - 1,
            _ => {
                self.error(SourceSpan::empty(self.text.len()), "Missing \"end\" of theory");
                outlines.len()
            }
        };
        for o in &outlines[1.min(body_end)..body_end] {
            self.command(o);
        }
        self.flush();
    }

    fn command(&mut self, o: &CommandOutline) {
        let name = o.name.as_str();
        if keywords::METHOD_COMMANDS.contains(&name) {
            self.methods(o);
        }
        if keywords::THEORY_GOALS.contains(&name) {
            self.flush();
            self.stack.push(Frame::Goal(o.keyword_span));
            self.state_after(o);
        } else if keywords::PROOF_GOALS.contains(&name) {
            if self.in_proof(o) {
                self.stack.push(Frame::Goal(o.keyword_span));
                self.state_after(o);
            }
        } else if name == "proof" {
            match self.stack.last() {
                Some(Frame::Goal(_)) => {
                    self.stack.pop();
                    self.stack.push(Frame::Block(o.keyword_span));
                }
                _ => self.error(o.keyword_span, NO_GOAL),
            }
        } else if name == "qed" {
            self.close_block(o.keyword_span, QED_WITHOUT_PROOF);
        } else if name == "next" {
            if !self.stack.iter().any(|f| matches!(f, Frame::Block(_))) {
                self.error(o.keyword_span, THEORY_MODE);
                return;
            }
            while let Some(Frame::Goal(span)) = self.stack.last().copied() {
                self.error(span, UNFINISHED_GOAL);
                self.stack.pop();
            }
        } else if keywords::TERMINAL_PROOFS.contains(&name) {
            match self.stack.last() {
                Some(Frame::Goal(_)) => {
                    self.stack.pop();
                    if name == "sorry" {
                        self.warning(o.keyword_span, "Skipped proof (sorry)");
                    }
                }
                _ => self.error(o.keyword_span, NO_GOAL),
            }
        } else if name == "apply" || name == "apply_end" {
            if !matches!(self.stack.last(), Some(Frame::Goal(_))) {
                self.error(o.keyword_span, NO_GOAL);
            }
        } else if keywords::PROOF_COMMANDS.contains(&name) {
            self.in_proof(o);
        } else {
            self.flush();
        }
    }

    fn in_proof(&mut self, o: &CommandOutline) -> bool {
        let ok = self.stack.iter().any(|f| matches!(f, Frame::Block(_)));
        if !ok {
            self.error(o.keyword_span, THEORY_MODE);
        }
        ok
    }

    fn close_block(&mut self, at: SourceSpan, missing: &str) {
        if !self.stack.iter().any(|f| matches!(f, Frame::Block(_))) {
            self.error(at, missing);
            return;
        }
        while let Some(Frame::Goal(span)) = self.stack.last().copied() {
            self.error(span, UNFINISHED_GOAL);
            self.stack.pop();
        }
        self.stack.pop();
    }

    /// Report whatever is still open and clear the stack.
    fn flush(&mut self) {
        let stack = std::mem::take(&mut self.stack);
        let blocks: Vec<SourceSpan> =
            stack.iter().filter_map(|f| if let Frame::Block(s) = f { Some(*s) } else { None }).collect();
        if blocks.is_empty() {
            for f in stack {
                if let Frame::Goal(span) = f {
                    self.error(span, UNFINISHED_GOAL);
                }
            }
        } else {
            for span in blocks {
                self.error(span, UNCLOSED_BLOCK);
            }
        }
    }

    fn methods(&mut self, o: &CommandOutline) {
        for t in &o.arguments {
            if matches!(t.kind, TokenKind::Identifier | TokenKind::LongIdentifier) && self.forbidden.contains(&t.text) {
                self.error(t.span, forbidden_method_text(&t.text));
            }
        }
    }

    fn state_after(&mut self, o: &CommandOutline) {
        let statement = o
            .arguments
            .iter()
            .rev()
            .find(|t| matches!(t.kind, TokenKind::QuotedString | TokenKind::Cartouche))
            .map(|t| {
                let inner = t.text.strip_prefix(['"', '‹']).unwrap_or(&t.text);
                inner.strip_suffix(['"', '›']).unwrap_or(inner).to_string()
            })
            .unwrap_or_default();
        self.states.push(ProofState {
            position: o.span.end,
            text: format!("goal (1 subgoal):\n 1. {statement}"),
            subgoals: 1,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proofbench_core::prover::ProverStatus;

    fn run(body: &str) -> ProverResult {
        check(&format!("theory T imports Main begin\n{body}\nend"), &["auto".to_string()].into())
    }

    fn errors(r: &ProverResult) -> Vec<&str> {
        r.messages.iter().filter(|m| m.severity == MessageSeverity::Error).map(|m| m.text.as_str()).collect()
    }

    #[test]
    fn finished_proofs_pass() {
        let r = run("lemma a: \"A ⟹ A\" by assumption\nlemma b: \"A\"\nproof -\n  show \"A\" sorry\nqed\nlemma c: \"B\"\n  apply (rule x)\n  done");
        assert_eq!(errors(&r), Vec::<&str>::new());
        assert_eq!(r.status, ProverStatus::FinishedOk);
        assert_eq!(r.states.len(), 4);
        assert_eq!(r.states[0].text, "goal (1 subgoal):\n 1. A ⟹ A");
    }

    #[test]
    fn proof_without_qed_is_one_error_at_proof() {
        let text = "theory T imports Main begin\nlemma x: \"A\"\nproof -\n  show \"A\" by assumption\nend";
        let r = check(text, &BTreeSet::new());
        assert_eq!(r.status, ProverStatus::FinishedFailed);
        assert_eq!(r.error_count(), 1);
        let m = &r.messages[0];
        assert_eq!(m.span.slice(text), "proof");
        assert_eq!(m.text, UNCLOSED_BLOCK);
    }

    #[test]
    fn unfinished_goal_at_statement() {
        let text = "theory T imports Main begin\nlemma x: \"A\"\nlemma y: \"B\" by simp\nend";
        let r = check(text, &BTreeSet::new());
        assert_eq!(errors(&r), [UNFINISHED_GOAL]);
        assert_eq!(r.messages[0].span.start, text.find("lemma x").unwrap());
    }

    #[test]
    fn forbidden_methods_and_strings() {
        let r = run("lemma \"auto\" by auto");
        assert_eq!(errors(&r), [forbidden_method_text("auto").as_str()]);
    }

    #[test]
    fn misplaced_commands() {
        assert_eq!(errors(&run("qed")), [QED_WITHOUT_PROOF]);
        assert_eq!(errors(&run("by simp")), [NO_GOAL]);
        assert_eq!(errors(&run("assume \"A\"")), [THEORY_MODE]);
        assert_eq!(errors(&run("lemma \"A\"\nproof -\n have \"B\"\nnext\nqed")), [UNFINISHED_GOAL]);
    }

    #[test]
    fn frame_and_syntax_errors() {
        assert!(check("lemma x: \"A\" by simp", &BTreeSet::new()).error_count() >= 1);
        let r = check("theory T imports Main begin\nlemma \"A", &BTreeSet::new());
        assert!(errors(&r).iter().any(|e| e.contains("unterminated")), "{r:?}");
        assert!(errors(&r).iter().any(|e| e.contains("end")));
        assert_eq!(errors(&run("lemma § \"A\" by simp")), ["Outer syntax error⌂: unexpected character `§`"]);
        assert!(check("", &BTreeSet::new()).error_count() == 1);
    }

    #[test]
    fn sorry_warns() {
        let r = run("lemma \"A\" sorry");
        assert_eq!(r.status, ProverStatus::FinishedOk);
        assert_eq!(r.messages.len(), 1);
        assert_eq!(r.messages[0].severity, MessageSeverity::Warning);
    }
}
