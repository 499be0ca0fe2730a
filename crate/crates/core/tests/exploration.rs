use std::collections::BTreeSet;

use fobl::corpus::{self, ladder};
use fobl::explorer::*;
use fobl::minilang::{compile, run, Declining, EntryPoint, TypedProgram};
use fobl::model::{ObliviousModel, StrategyKind};
use fobl::oracle::{OracleSpec, OutcomeSummary};
use proptest::prelude::*;

fn explore_all(program: &TypedProgram, entry: &EntryPoint, model: &ObliviousModel, oracle: OracleSpec) -> ExplorationResult {
    explore(program, entry, model, oracle, ExplorationBudget::default()).unwrap()
}

fn ladder_entry(n: usize, m: usize) -> (TypedProgram, EntryPoint) {
    let program = ladder(n, m).unwrap();
    let entry = EntryPoint::find_test(&program).unwrap();
    (program, entry)
}

#[test]
fn explore_equals_reference_on_every_corpus_program() {
    for entry in corpus::list_programs().unwrap() {
        let l = corpus::prepare(&entry).unwrap();
        let r = explore_all(&l.program, &l.entry, &l.model, l.oracle);
        let reference =
            enumerate_reference(&l.program, &l.entry, &l.model, l.oracle, ExplorationBudget::default()).unwrap();
        assert!(r.exhausted, "{}", entry.name);
        assert_eq!(r.sequences, reference.sequences, "{}", entry.name);
        assert_eq!(r.tree.failure_points().len(), reference.encountered_points.len(), "{}", entry.name);
    }
}

#[test]
fn ladder_sizes_are_powers() {
    for n in 1..=4 {
        for m in 1..=4 {
            let (p, e) = ladder_entry(n, m);
            let r = explore_all(&p, &e, &ObliviousModel::full(), OracleSpec::Default);
            assert_eq!(r.sequences.len(), m.pow(n as u32), "ladder({n}, {m})");
            assert!(r.sequences.iter().all(|s| s.len() == n));
        }
    }
}

#[test]
fn ladder_matches_reference() {
    let (p, e) = ladder_entry(2, 3);
    let model = ObliviousModel::full();
    let r = explore_all(&p, &e, &model, OracleSpec::Default);
    let reference = enumerate_reference(&p, &e, &model, OracleSpec::Default, ExplorationBudget::default()).unwrap();
    assert_eq!(r.sequences.len(), 9);
    let a: BTreeSet<_> = r.sequences.iter().collect();
    let b: BTreeSet<_> = reference.sequences.iter().collect();
    assert_eq!(a, b);
}

#[test]
fn sequences_are_unique_and_runs_match_leaves() {
    for entry in corpus::list_programs().unwrap() {
        let l = corpus::prepare(&entry).unwrap();
        let r = explore_all(&l.program, &l.entry, &l.model, l.oracle);
        let distinct: BTreeSet<_> = r.sequences.iter().map(|s| &s.decisions).collect();
        assert_eq!(distinct.len(), r.sequences.len(), "{}", entry.name);
        assert_eq!(r.runs_used, r.tree.leaf_count(), "{}", entry.name);
        assert_eq!(r.runs_used, r.sequences.len(), "{}", entry.name);
        assert_eq!(next_target(&r.tree), None);
    }
}

#[test]
fn replay_reproduces_recorded_outcomes() {
    for entry in corpus::list_programs().unwrap() {
        let l = corpus::prepare(&entry).unwrap();
        let r = explore_all(&l.program, &l.entry, &l.model, l.oracle);
        for s in &r.sequences {
            let (outcome, verdict) =
                replay(&l.program, &l.entry, &s.decisions, l.oracle, ExplorationBudget::default()).unwrap();
            assert_eq!(verdict, s.verdict, "{}: {:?}", entry.name, s.labels());
            assert_eq!(OutcomeSummary::from(&outcome), s.outcome);
            let applied: Vec<_> = outcome.decisions().cloned().collect();
            assert_eq!(applied, s.decisions);
        }
    }
}

#[test]
fn prefixes_meet_the_same_points() {
    let l = corpus::load("subline_intersection").unwrap();
    let r = explore_all(&l.program, &l.entry, &l.model, l.oracle);
    for s in &r.sequences {
        for cut in 0..s.len() {
            let (a, _) = replay(&l.program, &l.entry, &s.decisions[..cut], l.oracle, ExplorationBudget::default()).unwrap();
            let (b, _) = replay(&l.program, &l.entry, &s.decisions[..cut], l.oracle, ExplorationBudget::default()).unwrap();
            let ids = |o: &fobl::minilang::ExecOutcome| o.deref_log.iter().map(|e| e.failure_point.id).collect::<Vec<_>>();
            assert_eq!(ids(&a), ids(&b));
            assert_eq!(ids(&a)[cut], s.decisions[cut].failure_point.id);
        }
    }
}

#[test]
fn exploring_leaves_no_trace_on_later_runs() {
    for entry in corpus::list_programs().unwrap() {
        let l = corpus::prepare(&entry).unwrap();
        let before = run(&l.program, &l.entry, &mut Declining, Default::default()).unwrap();
        explore_all(&l.program, &l.entry, &l.model, l.oracle);
        let after = run(&l.program, &l.entry, &mut Declining, Default::default()).unwrap();
        assert_eq!(before, after, "{}", entry.name);
    }
}

#[test]
fn run_budget_yields_a_partial_prefix() {
    let l = corpus::load("subline_intersection").unwrap();
    let full = explore_all(&l.program, &l.entry, &l.model, l.oracle);
    for runs in 1..full.runs_used {
        let budget = ExplorationBudget { max_runs: runs, ..Default::default() };
        let Err(ExploreError::BudgetExceeded(partial)) = explore(&l.program, &l.entry, &l.model, l.oracle, budget) else {
            panic!("budget of {runs} should not suffice");
        };
        assert!(!partial.exhausted);
        assert_eq!(partial.runs_used, runs);
        assert_eq!(partial.sequences[..], full.sequences[..runs]);
    }
    let exact = ExplorationBudget { max_runs: full.runs_used, ..Default::default() };
    assert_eq!(explore(&l.program, &l.entry, &l.model, l.oracle, exact).unwrap(), full);
}

#[test]
fn restricting_the_model_never_adds_sequences() {
    let l = corpus::load("subline_intersection").unwrap();
    let full: BTreeSet<_> = explore_all(&l.program, &l.entry, &ObliviousModel::full(), l.oracle)
        .sequences
        .into_iter()
        .map(|s| s.decisions)
        .collect();
    for kind in StrategyKind::ALL {
        let restricted = explore_all(&l.program, &l.entry, &ObliviousModel::without([kind]), l.oracle);
        for s in restricted.sequences {
            assert!(s.decisions.iter().all(|d| d.kind != kind));
            // Every restricted path extends a prefix of some full-model path.
            assert!(full.iter().any(|f| f.starts_with(&s.decisions) || s.decisions.starts_with(f)));
        }
    }
}

#[test]
fn sequence_length_limit_truncates_consistently() {
    let l = corpus::load("subline_intersection").unwrap();
    for max in 1..=5 {
        let budget = ExplorationBudget { max_sequence_length: max, ..Default::default() };
        let r = explore(&l.program, &l.entry, &l.model, l.oracle, budget).unwrap();
        let reference = enumerate_reference(&l.program, &l.entry, &l.model, l.oracle, budget).unwrap();
        assert_eq!(r.sequences, reference.sequences, "max {max}");
        assert!(r.sequences.iter().all(|s| s.len() <= max));
    }
}

#[test]
fn loops_revisit_a_point_as_new_occurrences() {
    let src = "class P { int v; } class Main { P p;
        void test() { int i = 0; while (i < 3) { int x = this.p.v; i = i + 1; } } }";
    let program = compile(src).unwrap();
    let entry = EntryPoint::find_test(&program).unwrap();
    let model = ObliviousModel::without([StrategyKind::ReturnNull]);
    let r = explore_all(&program, &entry, &model, OracleSpec::Default);
    // R-NEW or SKIP-LINE at each of three iterations.
    assert_eq!(r.sequences.len(), 8);
    assert_eq!(r.tree.failure_points().len(), 1);
}

#[test]
fn skipping_the_loop_update_is_cut_off() {
    let src = "class C { int n; int next() { return this.n + 1; } } class Main { C c;
        void test() { int i = 0; while (i < 3) { i = this.c.next(); } } }";
    let program = compile(src).unwrap();
    let entry = EntryPoint::find_test(&program).unwrap();
    let model = ObliviousModel::without([StrategyKind::ReturnNull, StrategyKind::ReplaceNew]);
    let budget = ExplorationBudget { max_sequence_length: 3, ..Default::default() };
    let r = explore(&program, &entry, &model, OracleSpec::Default, budget).unwrap();
    assert!(r.exhausted);
    assert_eq!(r.sequences.len(), 1);
    assert_eq!(r.sequences[0].verdict.as_str(), "BUDGET_EXHAUSTED");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exploration_is_deterministic(n in 1usize..=3, m in 1usize..=4) {
        let (p, e) = ladder_entry(n, m);
        let a = explore_all(&p, &e, &ObliviousModel::full(), OracleSpec::Default);
        let b = explore_all(&p, &e, &ObliviousModel::full(), OracleSpec::Default);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cartesian_law_up_to_six(n in 1usize..=3, m in 1usize..=6) {
        let (p, e) = ladder_entry(n, m);
        let r = explore_all(&p, &e, &ObliviousModel::full(), OracleSpec::Default);
        prop_assert_eq!(r.sequences.len(), m.pow(n as u32));
    }
}
