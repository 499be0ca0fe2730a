use std::collections::BTreeSet;

use fobl::corpus::{self, derive_golden, ladder_source, GOLDEN_PROVENANCE};
use fobl::explorer::{explore, ExplorationBudget};
use fobl::minilang::{run, Declining, OutcomeKind};
use fobl::model::StrategyKind;
use fobl::oracle::OracleSpec;
use fobl::report::summarize;

#[test]
fn listing_is_sorted_and_complete() {
    let names: Vec<String> = corpus::list_programs().unwrap().into_iter().map(|e| e.name).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for required in ["session_date", "subline_intersection", "ladder", "barren", "fertile"] {
        assert!(names.iter().any(|n| n == required), "missing {required}");
    }
}

#[test]
fn goldens_are_reproducible_from_the_reference() {
    for entry in corpus::list_programs().unwrap() {
        let loaded = corpus::prepare(&entry).unwrap();
        let golden = corpus::golden(&entry).unwrap().expect("every program has a golden file");
        assert_eq!(golden.derived_by, GOLDEN_PROVENANCE);
        let fresh = derive_golden(&loaded, ExplorationBudget::default()).unwrap();
        assert_eq!(fresh, golden, "{}", entry.name);
        let explored = explore(&loaded.program, &loaded.entry, &loaded.model, loaded.oracle, Default::default()).unwrap();
        assert_eq!(summarize(&explored, loaded.oracle), golden.metrics, "{}", entry.name);
    }
}

#[test]
fn golden_round_trips_through_json() {
    for entry in corpus::list_programs().unwrap() {
        let golden = corpus::golden(&entry).unwrap().unwrap();
        assert_eq!(golden.to_json(), entry.golden.clone().unwrap(), "{}", entry.name);
    }
}

#[test]
fn shipped_ladder_is_the_generator_output() {
    let entry = corpus::find("ladder").unwrap();
    assert_eq!(entry.source, ladder_source(3, 3).unwrap());
}

#[test]
fn session_date_fails_at_the_session_without_intervention() {
    let l = corpus::load("session_date").unwrap();
    let outcome = run(&l.program, &l.entry, &mut Declining, Default::default()).unwrap();
    let OutcomeKind::NullDereferenceEscaped { location } = outcome.kind else { panic!("{:?}", outcome.kind) };
    let line = l.program.ast().class("Server").unwrap().methods[1].body[1].loc.line;
    assert_eq!(location.line, line);
    assert_eq!(l.model.disabled().collect::<Vec<_>>(), vec![StrategyKind::SkipLine]);
}

#[test]
fn regimes_have_the_expected_fertility() {
    for (name, fertility) in [("barren", 0.0), ("fertile", 1.0)] {
        let entry = corpus::find(name).unwrap();
        let golden = corpus::golden(&entry).unwrap().unwrap();
        assert_eq!(golden.metrics.fertility, fertility, "{name}");
        assert!(golden.metrics.sequences > 1, "{name}");
    }
}

#[test]
fn subline_has_single_and_compound_fixes() {
    let l = corpus::load("subline_intersection").unwrap();
    let r = explore(&l.program, &l.entry, &l.model, l.oracle, Default::default()).unwrap();
    let valid: Vec<_> = r.sequences.iter().filter(|s| s.verdict.is_valid()).collect();
    assert!(valid.iter().any(|s| s.len() == 1));
    assert!(valid.iter().any(|s| s.len() >= 2));
    assert_eq!(r.tree.failure_points().len(), 3);
    // A fresh one-dimensional vector returned from the projection fixes it alone.
    assert!(valid.iter().any(|s| s.len() == 1 && s.decisions[0].label() == "RET-NEW(Vector1D)"));
    let kinds: BTreeSet<_> = valid.iter().flat_map(|s| s.decisions.iter().map(|d| d.kind)).collect();
    assert!(kinds.len() >= 3);
    assert!(r.sequences.iter().any(|s| s.verdict.as_str() == "UNCAUGHT_EXCEPTION"));
}

#[test]
fn directory_listing_reads_files_and_goldens() {
    let dir = std::env::temp_dir().join(format!("fobl-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("b.ml0"), "class Main { void test() {} }").unwrap();
    std::fs::write(dir.join("a.ml0"), "// @oracle asserting\nclass Main { void test() {} }").unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();
    let entries = corpus::list_dir(&dir).unwrap();
    assert_eq!(entries.iter().map(|e| e.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    assert!(entries.iter().all(|e| e.golden.is_none()));
    let a = corpus::prepare(&entries[0]).unwrap();
    assert_eq!(a.oracle, OracleSpec::Asserting);
    std::fs::remove_dir_all(&dir).unwrap();
}
