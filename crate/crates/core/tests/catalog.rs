use proofbench_core::feedback::{RuleCatalog, RuleEntry};
use proofbench_core::syntax::SyntaxProfile;
use proptest::prelude::*;

proptest! {
    /// Display and prover names are in bijection for any valid catalog.
    #[test]
    fn names_are_a_bijection(pairs in proptest::collection::btree_map("[a-z]{1,6}", "[A-Z][a-z]{0,5}", 0..20)) {
        let mut seen = std::collections::BTreeSet::new();
        let entries: Vec<RuleEntry> = pairs
            .iter()
            .filter(|(_, p)| seen.insert((*p).clone()))
            .map(|(d, p)| RuleEntry::new(d, p, "", "c"))
            .collect();
        let c = RuleCatalog::new(entries.clone()).unwrap();
        for e in &entries {
            prop_assert_eq!(c.to_prover_name(&e.display), Some(e.prover.as_str()));
            prop_assert_eq!(c.to_display_name(&e.prover), Some(e.display.as_str()));
        }
        prop_assert_eq!(c.alias_declarations().lines().count(), entries.len());
    }
}

#[test]
fn bundled_aliases_are_parseable_lemmas() {
    let c = RuleCatalog::bundled();
    for line in c.alias_declarations().lines() {
        let rest = line.strip_prefix("lemmas ").unwrap();
        let (display, prover) = rest.split_once(" = ").unwrap();
        assert_eq!(c.to_prover_name(display), Some(prover));
    }
    assert_eq!(c.list_rules(&SyntaxProfile::permissive("p"), None).len(), c.entries().len());
}
