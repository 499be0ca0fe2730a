//! Exhaustive exploration of the decision space of one failing input.
//!
//! Every run re-executes the entry point from scratch. At each interception
//! the driver walks the decision tree built so far, following the leftmost
//! edge whose subtree is not yet complete. Reaching an occurrence for the first
//! time creates a node whose edges are the model's decisions in canonical
//! order. Each run ends in exactly one new leaf.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{
    run, EntryPoint, ExecOutcome, ExecutionBudget, Interceptor, Response, RunError, TypedProgram,
};
use crate::model::{Decision, DecisionContext, FailurePoint, FailurePointId, ObliviousModel};
use crate::oracle::{evaluate, OracleSpec, OutcomeSummary, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationBudget {
    pub max_sequence_length: usize,
    pub max_runs: usize,
    pub execution: ExecutionBudget,
}

impl Default for ExplorationBudget {
    fn default() -> Self {
        ExplorationBudget { max_sequence_length: 16, max_runs: 100_000, execution: ExecutionBudget::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecisionSequence {
    pub decisions: Vec<Decision>,
    pub verdict: Verdict,
    pub outcome: OutcomeSummary,
}

impl DecisionSequence {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// `[R-NEW(A)@3:5, RET-NULL@7:9]`
    pub fn labels(&self) -> Vec<String> {
        self.decisions.iter().map(ToString::to_string).collect()
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    Point { failure_point: FailurePoint, occurrence: usize },
    /// Index into [`ExplorationResult::sequences`].
    Leaf { sequence: usize, verdict: Verdict },
}

/// `decision` is `None` for the start edge and for the single edge of an
/// occurrence where the model offered nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub decision: Option<Decision>,
    pub target: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub edges: Vec<Edge>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl Default for DecisionTree {
    fn default() -> Self {
        Self::new()
    }
}

impl DecisionTree {
    pub const ROOT: NodeId = 0;

    pub fn new() -> Self {
        let start = Node { kind: NodeKind::Start, edges: vec![Edge { decision: None, target: None }], complete: false };
        DecisionTree { nodes: vec![start] }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_complete(&self) -> bool {
        self.nodes[Self::ROOT].complete
    }

    /// Distinct failure points with a node in the tree, in DFS first-seen order.
    pub fn failure_points(&self) -> Vec<&FailurePoint> {
        let mut out: Vec<&FailurePoint> = Vec::new();
        let mut stack = vec![Self::ROOT];
        while let Some(id) = stack.pop() {
            if let NodeKind::Point { failure_point, .. } = &self.nodes[id].kind {
                if !out.iter().any(|p| p.id == failure_point.id) {
                    out.push(failure_point);
                }
            }
            stack.extend(self.nodes[id].edges.iter().rev().filter_map(|e| e.target));
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Leaf { .. })).count()
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Leftmost edge of `id` whose subtree is unexplored or incomplete.
    fn open_edge(&self, id: NodeId) -> Option<usize> {
        self.nodes[id].edges.iter().position(|e| e.target.is_none_or(|t| !self.nodes[t].complete))
    }

    fn refresh(&mut self, path: &[NodeId]) {
        for &id in path.iter().rev() {
            let complete =
                self.nodes[id].edges.iter().all(|e| e.target.is_some_and(|t| self.nodes[t].complete));
            self.nodes[id].complete = complete;
        }
    }
}

/// The next path to steer towards: replay `prefix`, then take `frontier` at
/// the following interception. A `None` frontier means the occurrence has not
/// been seen yet, so its first decision in canonical order is taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub prefix: Vec<Decision>,
    pub frontier: Option<Decision>,
}

pub fn next_target(tree: &DecisionTree) -> Option<Target> {
    let mut prefix = Vec::new();
    let mut at = DecisionTree::ROOT;
    loop {
        let idx = tree.open_edge(at)?;
        let edge = &tree.nodes[at].edges[idx];
        match edge.target {
            None => return Some(Target { prefix, frontier: edge.decision.clone() }),
            Some(next) => {
                prefix.extend(edge.decision.clone());
                at = next;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub tree: DecisionTree,
    pub sequences: Vec<DecisionSequence>,
    pub exhausted: bool,
    pub runs_used: usize,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("run budget exhausted after {} runs with unexplored decisions left", .0.runs_used)]
    BudgetExceeded(Box<ExplorationResult>),
    #[error("reference enumeration exceeded {0} leaves")]
    ReferenceBudgetExceeded(usize),
    #[error("execution diverged from the recorded decision tree at {0}")]
    Nondeterministic(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

struct Steering<'a> {
    tree: &'a mut DecisionTree,
    model: &'a ObliviousModel,
    max_len: usize,
    /// The edge currently being followed, as `(node, edge index)`.
    edge: (NodeId, usize),
    path: Vec<NodeId>,
    occurrences: BTreeMap<FailurePointId, usize>,
    decisions: Vec<Decision>,
    diverged: Option<String>,
}

impl Interceptor for Steering<'_> {
    fn intercept(&mut self, ctx: &DecisionContext) -> Response {
        let fp = &ctx.failure_point;
        let count = self.occurrences.entry(fp.id).or_insert(0);
        let occurrence = *count;
        *count += 1;

        let (parent, idx) = self.edge;
        let node = match self.tree.nodes[parent].edges[idx].target {
            Some(node) => {
                match &self.tree.nodes[node].kind {
                    NodeKind::Point { failure_point, occurrence: o }
                        if failure_point.id == fp.id && *o == occurrence => {}
                    _ => {
                        self.diverged = Some(fp.location.to_string());
                        return Response::Truncate;
                    }
                }
                node
            }
            None => {
                if self.decisions.len() >= self.max_len {
                    return Response::Truncate;
                }
                let mut edges: Vec<Edge> = self
                    .model
                    .decisions(ctx)
                    .into_iter()
                    .map(|d| Edge { decision: Some(d), target: None })
                    .collect();
                if edges.is_empty() {
                    edges.push(Edge { decision: None, target: None });
                }
                let kind = NodeKind::Point { failure_point: fp.clone(), occurrence };
                let id = self.tree.push(Node { kind, edges, complete: false });
                self.tree.nodes[parent].edges[idx].target = Some(id);
                id
            }
        };
        self.path.push(node);
        let choice = self.tree.open_edge(node).expect("incomplete node has an open edge");
        self.edge = (node, choice);
        match &self.tree.nodes[node].edges[choice].decision {
            Some(d) => {
                self.decisions.push(d.clone());
                Response::Apply(d.clone())
            }
            None => Response::Decline,
        }
    }
}

pub fn explore(
    program: &TypedProgram,
    entry: &EntryPoint,
    model: &ObliviousModel,
    oracle: OracleSpec,
    budget: ExplorationBudget,
) -> Result<ExplorationResult, ExploreError> {
    let mut tree = DecisionTree::new();
    let mut sequences = Vec::new();
    let mut runs_used = 0;

    while !tree.is_complete() {
        if runs_used >= budget.max_runs {
            let partial = ExplorationResult { tree, sequences, exhausted: false, runs_used };
            return Err(ExploreError::BudgetExceeded(Box::new(partial)));
        }
        let mut steer = Steering {
            tree: &mut tree,
            model,
            max_len: budget.max_sequence_length,
            edge: (DecisionTree::ROOT, 0),
            path: vec![DecisionTree::ROOT],
            occurrences: BTreeMap::new(),
            decisions: Vec::new(),
            diverged: None,
        };
        let outcome = run(program, entry, &mut steer, budget.execution)?;
        runs_used += 1;
        if let Some(at) = steer.diverged {
            return Err(ExploreError::Nondeterministic(at));
        }
        let (parent, idx) = steer.edge;
        let path = std::mem::take(&mut steer.path);
        let decisions = std::mem::take(&mut steer.decisions);
        if tree.nodes[parent].edges[idx].target.is_some() {
            return Err(ExploreError::Nondeterministic("run ended before a recorded interception".into()));
        }
        let seq = sequence(decisions, &outcome, oracle);
        let kind = NodeKind::Leaf { sequence: sequences.len(), verdict: seq.verdict };
        let leaf = tree.push(Node { kind, edges: vec![], complete: true });
        tree.nodes[parent].edges[idx].target = Some(leaf);
        tree.refresh(&path);
        sequences.push(seq);
    }
    Ok(ExplorationResult { tree, sequences, exhausted: true, runs_used })
}

fn sequence(decisions: Vec<Decision>, outcome: &ExecOutcome, oracle: OracleSpec) -> DecisionSequence {
    DecisionSequence { decisions, verdict: evaluate(outcome, oracle), outcome: OutcomeSummary::from(outcome) }
}

/// Interceptor that applies a fixed decision list and then either declines or,
/// when the list already has the maximum length, truncates.
struct Script<'a> {
    decisions: &'a [Decision],
    max_len: usize,
    next: usize,
    /// Decisions the model offered at the first interception past the script.
    frontier: Option<Vec<Decision>>,
    /// The failure point at the first interception past the script, when one
    /// was offered decisions (possibly none).
    frontier_point: Option<FailurePoint>,
    model: Option<&'a ObliviousModel>,
}

impl Interceptor for Script<'_> {
    fn intercept(&mut self, ctx: &DecisionContext) -> Response {
        if let Some(d) = self.decisions.get(self.next) {
            self.next += 1;
            return Response::Apply(d.clone());
        }
        if self.decisions.len() >= self.max_len {
            return Response::Truncate;
        }
        match self.model {
            Some(model) => {
                self.frontier_point = Some(ctx.failure_point.clone());
                let options = model.decisions(ctx);
                if options.is_empty() {
                    Response::Decline
                } else {
                    self.frontier = Some(options);
                    Response::Truncate
                }
            }
            None => Response::Decline,
        }
    }
}

/// Re-runs the entry point forcing `decisions`, with the same behaviour past
/// the end of the list as the explorer.
pub fn replay(
    program: &TypedProgram,
    entry: &EntryPoint,
    decisions: &[Decision],
    oracle: OracleSpec,
    budget: ExplorationBudget,
) -> Result<(ExecOutcome, Verdict), RunError> {
    let mut script = Script { decisions, max_len: budget.max_sequence_length, next: 0, frontier: None, frontier_point: None, model: None };
    let outcome = run(program, entry, &mut script, budget.execution)?;
    let verdict = evaluate(&outcome, oracle);
    Ok((outcome, verdict))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceResult {
    pub sequences: Vec<DecisionSequence>,
    /// Distinct failure points at which the model was consulted, in first-seen
    /// order. Interceptions cut off by the sequence-length limit do not count.
    pub encountered_points: Vec<FailurePoint>,
}

/// Brute-force enumeration that shares no bookkeeping with [`explore`]: it
/// recursively re-executes every prefix and branches on every decision the
/// model offers at the first interception past it. Budget semantics match
/// `explore`, with `max_runs` bounding the number of sequences.
pub fn enumerate_reference(
    program: &TypedProgram,
    entry: &EntryPoint,
    model: &ObliviousModel,
    oracle: OracleSpec,
    budget: ExplorationBudget,
) -> Result<ReferenceResult, ExploreError> {
    let mut out = ReferenceResult { sequences: Vec::new(), encountered_points: Vec::new() };
    let mut prefix = Vec::new();
    branch(program, entry, model, oracle, budget, &mut prefix, &mut out)?;
    Ok(out)
}

fn branch(
    program: &TypedProgram,
    entry: &EntryPoint,
    model: &ObliviousModel,
    oracle: OracleSpec,
    budget: ExplorationBudget,
    prefix: &mut Vec<Decision>,
    out: &mut ReferenceResult,
) -> Result<(), ExploreError> {
    let mut script = Script {
        decisions: prefix,
        max_len: budget.max_sequence_length,
        next: 0,
        frontier: None,
        frontier_point: None,
        model: Some(model),
    };
    let outcome = run(program, entry, &mut script, budget.execution)?;
    let frontier = script.frontier.take();
    let seen = prefix.iter().map(|d| &d.failure_point).chain(script.frontier_point.as_ref());
    for point in seen {
        if !out.encountered_points.iter().any(|p| p.id == point.id) {
            out.encountered_points.push(point.clone());
        }
    }
    match frontier {
        None => {
            if out.sequences.len() >= budget.max_runs {
                return Err(ExploreError::ReferenceBudgetExceeded(budget.max_runs));
            }
            out.sequences.push(sequence(prefix.clone(), &outcome, oracle));
        }
        Some(options) => {
            for d in options {
                prefix.push(d);
                branch(program, entry, model, oracle, budget, prefix, out)?;
                prefix.pop();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{compile, Declining};
    use crate::model::StrategyKind;

    const TWO_POINTS: &str = "opaque class H { bool ready; void touch() {} }
        class Main { H a; H b;
            bool check() { return this.a.ready; }
            void test() { if (check()) {} this.b.touch(); } }";

    fn setup(src: &str) -> (TypedProgram, EntryPoint) {
        let program = compile(src).unwrap();
        let entry = EntryPoint::find_test(&program).unwrap();
        (program, entry)
    }

    #[test]
    fn no_dereference_means_one_empty_sequence() {
        let (p, e) = setup("class Main { void test() { int x = 1; } }");
        let r = explore(&p, &e, &ObliviousModel::full(), OracleSpec::Default, ExplorationBudget::default()).unwrap();
        assert!(r.exhausted);
        assert_eq!(r.runs_used, 1);
        assert_eq!(r.sequences.len(), 1);
        assert!(r.sequences[0].is_empty());
        assert!(r.sequences[0].verdict.is_valid());
    }

    #[test]
    fn fresh_tree_targets_first_decision_of_first_interception() {
        let tree = DecisionTree::new();
        assert_eq!(next_target(&tree), Some(Target { prefix: vec![], frontier: None }));
    }

    #[test]
    fn complete_tree_has_no_target() {
        let (p, e) = setup(TWO_POINTS);
        let r = explore(&p, &e, &ObliviousModel::full(), OracleSpec::Default, ExplorationBudget::default()).unwrap();
        assert_eq!(next_target(&r.tree), None);
    }

    #[test]
    fn only_last_child_open_is_targeted() {
        let (p, e) = setup(TWO_POINTS);
        // The first point admits one decision (RET-NULL); the second admits two.
        let budget = ExplorationBudget { max_runs: 1, ..Default::default() };
        let Err(ExploreError::BudgetExceeded(partial)) =
            explore(&p, &e, &ObliviousModel::full(), OracleSpec::Default, budget)
        else {
            panic!("expected budget error")
        };
        let target = next_target(&partial.tree).unwrap();
        assert_eq!(target.prefix.len(), 1);
        let first = &partial.sequences[0].decisions;
        let frontier = target.frontier.unwrap();
        assert_eq!(target.prefix[0], first[0]);
        assert_ne!(frontier, first[1]);
        assert_eq!(frontier.failure_point.id, first[1].failure_point.id);
    }

    #[test]
    fn explore_matches_reference_and_counts_runs() {
        let (p, e) = setup(TWO_POINTS);
        let model = ObliviousModel::full();
        let r = explore(&p, &e, &model, OracleSpec::Default, ExplorationBudget::default()).unwrap();
        let reference = enumerate_reference(&p, &e, &model, OracleSpec::Default, ExplorationBudget::default()).unwrap();
        assert_eq!(r.sequences, reference.sequences);
        assert_eq!(r.runs_used, r.tree.leaf_count());
        assert_eq!(reference.encountered_points.len(), 2);
    }

    #[test]
    fn loops_create_distinct_occurrences_and_truncate() {
        let src = "class P { int v; } class Main { P p;
            void test() { int i = 0; while (i < 100) { int x = this.p.v; i = i + 1; } } }";
        let (p, e) = setup(src);
        let model = ObliviousModel::without([StrategyKind::ReplaceReuse, StrategyKind::SkipLine, StrategyKind::ReturnNull]);
        let budget = ExplorationBudget { max_sequence_length: 5, ..Default::default() };
        let r = explore(&p, &e, &model, OracleSpec::Default, budget).unwrap();
        assert!(r.exhausted);
        assert_eq!(r.sequences.len(), 1);
        assert_eq!(r.sequences[0].len(), 5);
        assert_eq!(r.sequences[0].verdict.as_str(), "BUDGET_EXHAUSTED");
        let reference = enumerate_reference(&p, &e, &model, OracleSpec::Default, budget).unwrap();
        assert_eq!(r.sequences, reference.sequences);
    }

    #[test]
    fn empty_model_declines() {
        let (p, e) = setup(TWO_POINTS);
        let model = ObliviousModel::without(StrategyKind::ALL);
        let r = explore(&p, &e, &model, OracleSpec::Default, ExplorationBudget::default()).unwrap();
        assert_eq!(r.sequences.len(), 1);
        assert_eq!(r.sequences[0].verdict.as_str(), "NPE_ESCAPED");
        let reference = enumerate_reference(&p, &e, &model, OracleSpec::Default, ExplorationBudget::default()).unwrap();
        assert_eq!(r.sequences, reference.sequences);
    }

    #[test]
    fn replay_reproduces_every_verdict() {
        let (p, e) = setup(TWO_POINTS);
        let budget = ExplorationBudget::default();
        let r = explore(&p, &e, &ObliviousModel::full(), OracleSpec::Asserting, budget).unwrap();
        for s in &r.sequences {
            let (outcome, verdict) = replay(&p, &e, &s.decisions, OracleSpec::Asserting, budget).unwrap();
            assert_eq!(verdict, s.verdict);
            assert_eq!(OutcomeSummary::from(&outcome), s.outcome);
        }
        let plain = run(&p, &e, &mut Declining, budget.execution).unwrap();
        let again = run(&p, &e, &mut Declining, budget.execution).unwrap();
        assert_eq!(plain, again);
    }
}
