//! The bundled fixture file must key its responses to the exact theories
//! assembled from the bundled solutions. Run with PB_BLESS=1 to refresh
//! the hashes after editing a tutorial or solution.

use std::path::PathBuf;

use proofbench_core::prover::{MessageSeverity, ProverStatus};
use proofbench_core::tutorial::{assemble_theory, load_tutorial, Solution};
use proofbench_gateway::{theory_hash, FixtureSet, MockConfig};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tutorials")
}

fn theory(solution: &str) -> String {
    let tutorial = load_tutorial(&std::fs::read_to_string(root().join("conjunction.toml")).unwrap()).unwrap();
    let doc = std::fs::read_to_string(root().join(format!("solutions/{solution}.toml"))).unwrap();
    let state = Solution::parse(&doc).unwrap().state("u", &tutorial).unwrap();
    assemble_theory(&tutorial, &state).unwrap().text
}

#[test]
fn hashes_match_assembled_solutions() {
    let path = root().join("fixtures/conjunction.json");
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let bless = std::env::var_os("PB_BLESS").is_some();
    for f in file["fixtures"].as_array_mut().unwrap() {
        let name = f["name"].as_str().unwrap().to_string();
        let expected = theory_hash(&theory(&name));
        if bless {
            f["sha256"] = Value::String(expected);
        } else {
            assert_eq!(f["sha256"].as_str(), Some(expected.as_str()), "stale hash for {name}; rerun with PB_BLESS=1");
        }
    }
    if bless {
        std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap() + "\n").unwrap();
    }
}

#[test]
fn fixture_responses_resolve_anchors() {
    let set = FixtureSet::load(&root().join("fixtures")).unwrap();
    assert_eq!(set.len(), 2);
    let config = MockConfig::fixture(set);

    let ok = theory("conjunction.correct");
    let r = config.check(&ok);
    assert_eq!(r.status, ProverStatus::FinishedOk);
    assert!(r.messages.is_empty());
    assert_eq!(r.states.len(), 3);
    for s in &r.states {
        assert!(s.position > 0 && s.position <= ok.len());
    }

    let broken = theory("conjunction.broken");
    let r = config.check(&broken);
    assert_eq!(r.status, ProverStatus::FinishedFailed);
    assert_eq!(r.messages.len(), 1);
    let m = &r.messages[0];
    assert_eq!(m.severity, MessageSeverity::Error);
    assert_eq!(&broken[m.span.start..m.span.end], "by (rule impI)");
    assert!(m.text.starts_with("Failed to apply initial proof method"));
}

#[test]
fn unknown_theory_falls_back_to_structural() {
    let config = MockConfig::fixture(FixtureSet::load(&root().join("fixtures")).unwrap());
    let r = config.check("theory T imports Main begin\nlemma \"A\" by auto\nend");
    assert_eq!(r.status, ProverStatus::FinishedFailed);
    assert!(r.messages[0].text.contains("\"auto\""));
}
