//! Search-space metrics and serializations (DOT, JSON, CSV, text table).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::explorer::{DecisionSequence, DecisionTree, ExplorationResult, NodeKind};
use crate::oracle::{evaluate_summary, OracleSpec};

pub const CSV_HEADER: &str = "name,points,sequences,valid,fertility,min,median,max";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceMetrics {
    /// Distinct failure points encountered.
    pub points: usize,
    pub sequences: usize,
    pub valid: usize,
    /// `valid / sequences`, or 0 for an empty result.
    pub fertility: f64,
    pub valid_len_min: Option<usize>,
    /// Lower median.
    pub valid_len_median: Option<usize>,
    pub valid_len_max: Option<usize>,
    /// Number of distinct strategy kinds in a valid sequence, to count.
    pub strategy_mix_histogram: BTreeMap<usize, usize>,
    /// Length of a valid sequence, to count. Lets totals pool medians.
    pub valid_lengths: BTreeMap<usize, usize>,
}

impl SpaceMetrics {
    pub fn from_sequences(sequences: &[DecisionSequence], points: usize, spec: OracleSpec) -> Self {
        let mut valid_lengths = BTreeMap::new();
        let mut histogram = BTreeMap::new();
        let mut valid = 0;
        for s in sequences {
            if !evaluate_summary(&s.outcome, spec).is_valid() {
                continue;
            }
            valid += 1;
            *valid_lengths.entry(s.len()).or_insert(0) += 1;
            let kinds: BTreeSet<_> = s.decisions.iter().map(|d| d.kind).collect();
            *histogram.entry(kinds.len()).or_insert(0) += 1;
        }
        Self::from_counts(points, sequences.len(), valid, valid_lengths, histogram)
    }

    fn from_counts(
        points: usize,
        sequences: usize,
        valid: usize,
        valid_lengths: BTreeMap<usize, usize>,
        strategy_mix_histogram: BTreeMap<usize, usize>,
    ) -> Self {
        let fertility = if sequences == 0 { 0.0 } else { valid as f64 / sequences as f64 };
        SpaceMetrics {
            points,
            sequences,
            valid,
            fertility,
            valid_len_min: valid_lengths.keys().next().copied(),
            valid_len_median: lower_median(&valid_lengths),
            valid_len_max: valid_lengths.keys().next_back().copied(),
            strategy_mix_histogram,
            valid_lengths,
        }
    }

    /// Pools several rows, as the `Total` line of a corpus table.
    pub fn total<'a>(rows: impl IntoIterator<Item = &'a SpaceMetrics>) -> SpaceMetrics {
        let (mut points, mut sequences, mut valid) = (0, 0, 0);
        let mut lengths = BTreeMap::new();
        let mut histogram = BTreeMap::new();
        for m in rows {
            points += m.points;
            sequences += m.sequences;
            valid += m.valid;
            for (k, v) in &m.valid_lengths {
                *lengths.entry(*k).or_insert(0) += v;
            }
            for (k, v) in &m.strategy_mix_histogram {
                *histogram.entry(*k).or_insert(0) += v;
            }
        }
        Self::from_counts(points, sequences, valid, lengths, histogram)
    }
}

/// Element at index `ceil(k/2) - 1` of the sorted multiset.
fn lower_median(counts: &BTreeMap<usize, usize>) -> Option<usize> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return None;
    }
    let target = total.div_ceil(2) - 1;
    let mut seen = 0;
    for (&len, &n) in counts {
        seen += n;
        if seen > target {
            return Some(len);
        }
    }
    None
}

/// Recomputes verdicts under `spec`, so one exploration can be summarized
/// under either oracle.
pub fn summarize(result: &ExplorationResult, spec: OracleSpec) -> SpaceMetrics {
    SpaceMetrics::from_sequences(&result.sequences, result.tree.failure_points().len(), spec)
}

/// `x` with four significant digits, never in exponent form.
pub fn four_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0.000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (0.99996 -> 1.0000).
    let rounded: f64 = text.parse().unwrap_or(x);
    if rounded.abs() >= 10f64.powi(magnitude + 1) && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    text
}

fn opt(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

/// One CSV line per row, then a `Total` line.
pub fn to_csv(rows: &[(String, SpaceMetrics)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let line = |out: &mut String, name: &str, m: &SpaceMetrics| {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{}",
            m.points,
            m.sequences,
            m.valid,
            four_sig(m.fertility),
            opt(m.valid_len_min),
            opt(m.valid_len_median),
            opt(m.valid_len_max)
        );
    };
    for (name, m) in rows {
        line(&mut out, name, m);
    }
    line(&mut out, "Total", &SpaceMetrics::total(rows.iter().map(|(_, m)| m)));
    out
}

/// Aggregated strategy-mix histogram over all rows not named in `exclude`.
pub fn histogram(rows: &[(String, SpaceMetrics)], exclude: &[String]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (name, m) in rows {
        if exclude.contains(name) {
            continue;
        }
        for (k, v) in &m.strategy_mix_histogram {
            *out.entry(*k).or_insert(0) += v;
        }
    }
    out
}

/// Human-readable table with percentages, followed by the histogram.
pub fn to_table(rows: &[(String, SpaceMetrics)], exclude: &[String]) -> String {
    let total = SpaceMetrics::total(rows.iter().map(|(_, m)| m));
    let mut cells: Vec<[String; 8]> = vec![[
        "name".into(),
        "points".into(),
        "sequences".into(),
        "valid".into(),
        "fertility".into(),
        "min".into(),
        "median".into(),
        "max".into(),
    ]];
    let dash = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
    for (name, m) in rows.iter().map(|(n, m)| (n.as_str(), m)).chain(std::iter::once(("Total", &total))) {
        cells.push([
            name.to_string(),
            m.points.to_string(),
            m.sequences.to_string(),
            m.valid.to_string(),
            format!("{:.1}%", m.fertility * 100.0),
            dash(m.valid_len_min),
            dash(m.valid_len_median),
            dash(m.valid_len_max),
        ]);
    }
    let widths: Vec<usize> = (0..8).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str("\nstrategy kinds per valid sequence:\n");
    for (k, v) in histogram(rows, exclude) {
        let _ = writeln!(out, "  {k}: {v}");
    }
    out
}

/// Graphviz rendering. Failure points are numbered `NPE1`, `NPE2`, ... in
/// depth-first order of first appearance; leaves read `OK` or
/// `Failure(<reason>)`.
pub fn to_dot(tree: &DecisionTree) -> String {
    let mut dot = Dot { out: String::new(), numbers: BTreeMap::new(), points: 0, leaves: 0, pending: 0 };
    dot.out.push_str("digraph decisions {\n");
    dot.out.push_str("  node [fontname=\"Helvetica\"];\n");
    dot.out.push_str("  start [label=\"Execution Start\", shape=box];\n");
    dot.visit(tree, DecisionTree::ROOT, "start");
    dot.out.push_str("}\n");
    dot.out
}

struct Dot {
    out: String,
    numbers: BTreeMap<u64, usize>,
    points: usize,
    leaves: usize,
    pending: usize,
}

impl Dot {
    fn visit(&mut self, tree: &DecisionTree, id: usize, from: &str) {
        for edge in &tree.node(id).edges {
            let to = match edge.target {
                None => {
                    self.pending += 1;
                    let name = format!("pending{}", self.pending);
                    let _ = writeln!(self.out, "  {name} [label=\"?\", style=dashed];");
                    name
                }
                Some(t) => match &tree.node(t).kind {
                    NodeKind::Point { failure_point, .. } => {
                        self.points += 1;
                        let next = self.numbers.len() + 1;
                        let k = *self.numbers.entry(failure_point.id.0).or_insert(next);
                        let name = format!("p{}", self.points);
                        let _ = writeln!(self.out, "  {name} [label=\"NPE{k}@{}\"];", failure_point.location);
                        name
                    }
                    NodeKind::Leaf { verdict, .. } => {
                        self.leaves += 1;
                        let name = format!("end{}", self.leaves);
                        let label =
                            if verdict.is_valid() { "OK".to_string() } else { format!("Failure({verdict})") };
                        let _ = writeln!(self.out, "  {name} [label=\"{label}\", shape=ellipse];");
                        name
                    }
                    NodeKind::Start => unreachable!("start is the root"),
                },
            };
            match &edge.decision {
                Some(d) => {
                    let _ = writeln!(self.out, "  {from} -> {to} [label=\"{}\"];", d.label());
                }
                None => {
                    let _ = writeln!(self.out, "  {from} -> {to};");
                }
            }
            if let Some(t) = edge.target {
                self.visit(tree, t, &to);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics: SpaceMetrics,
    pub result: ExplorationResult,
}

pub fn to_json(result: &ExplorationResult, metrics: &SpaceMetrics) -> String {
    let report = Report { metrics: metrics.clone(), result: result.clone() };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{ExprId, Loc, StmtId, Type};
    use crate::model::{Decision, DerefKind, FailurePoint, MethodSig, StatementKind, StrategyKind};
    use crate::oracle::{InvalidReason, OutcomeSummary, Verdict};

    fn point(n: u32) -> FailurePoint {
        let sig = MethodSig { class: "A".into(), name: "m".into(), ret: Type::Void };
        FailurePoint::new(sig, StmtId(n), ExprId(n), DerefKind::FieldRead, StatementKind::Assign, Loc::new(n, 1))
    }

    fn seq(kinds: &[StrategyKind], valid: bool) -> DecisionSequence {
        let decisions = kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| Decision { failure_point: point(i as u32 + 1), kind, operand: None })
            .collect();
        let (verdict, outcome) = if valid {
            (Verdict::Valid, OutcomeSummary::Completed { failed_assertion: None })
        } else {
            (
                Verdict::Invalid(InvalidReason::NullDereferenceEscaped),
                OutcomeSummary::NullDereferenceEscaped { location: Loc::new(1, 1) },
            )
        };
        DecisionSequence { decisions, verdict, outcome }
    }

    #[test]
    fn two_point_example_metrics() {
        use StrategyKind::*;
        let mut seqs = vec![seq(&[ReplaceNew, ReturnNull], true); 16];
        seqs.extend(vec![seq(&[SkipLine, SkipLine], false); 29]);
        let m = SpaceMetrics::from_sequences(&seqs, 2, OracleSpec::Default);
        assert_eq!((m.sequences, m.valid), (45, 16));
        assert!((m.fertility - 0.3556).abs() < 1e-4);
        assert_eq!(four_sig(m.fertility), "0.3556");
        assert_eq!((m.valid_len_min, m.valid_len_median, m.valid_len_max), (Some(2), Some(2), Some(2)));
    }

    #[test]
    fn nothing_valid_has_no_lengths() {
        let m = SpaceMetrics::from_sequences(&[seq(&[StrategyKind::SkipLine], false)], 1, OracleSpec::Default);
        assert_eq!(m.fertility, 0.0);
        assert_eq!(m.valid_len_min, None);
        let csv = to_csv(&[("x".into(), m)]);
        assert!(csv.contains("\nx,1,1,0,0.000,,,\n"));
    }

    #[test]
    fn histogram_counts_distinct_kinds() {
        use StrategyKind::*;
        let seqs = [seq(&[ReplaceNew], true), seq(&[ReplaceNew, SkipLine], true), seq(&[SkipLine, ReplaceNew], true)];
        let m = SpaceMetrics::from_sequences(&seqs, 2, OracleSpec::Default);
        assert_eq!(m.strategy_mix_histogram, BTreeMap::from([(1, 1), (2, 2)]));
    }

    #[test]
    fn lower_median_of_even_list() {
        let counts = BTreeMap::from([(1, 1), (2, 1), (3, 1), (4, 1)]);
        assert_eq!(lower_median(&counts), Some(2));
        assert_eq!(lower_median(&BTreeMap::from([(5, 3)])), Some(5));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(four_sig(1.0), "1.000");
        assert_eq!(four_sig(0.0), "0.000");
        assert_eq!(four_sig(0.05), "0.05000");
        assert_eq!(four_sig(0.99996), "1.000");
        assert_eq!(four_sig(2.0 / 3.0), "0.6667");
    }

    #[test]
    fn csv_total_pools_rows() {
        use StrategyKind::*;
        let a = SpaceMetrics::from_sequences(&[seq(&[ReplaceNew], true), seq(&[SkipLine], false)], 1, OracleSpec::Default);
        let b = SpaceMetrics::from_sequences(&[seq(&[ReplaceNew, SkipLine, ReturnNull], true)], 3, OracleSpec::Default);
        let csv = to_csv(&[("a".into(), a), ("b".into(), b)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[3], "Total,4,3,2,0.6667,1,1,3");
    }

    #[test]
    fn empty_tree_dot_is_single_edge() {
        let program = crate::minilang::compile("class Main { void test() {} }").unwrap();
        let entry = crate::minilang::EntryPoint::find_test(&program).unwrap();
        let result = crate::explorer::explore(
            &program,
            &entry,
            &crate::model::ObliviousModel::full(),
            OracleSpec::Default,
            Default::default(),
        )
        .unwrap();
        let dot = to_dot(&result.tree);
        assert!(dot.contains("start -> end1;"));
        assert_eq!(dot.matches("->").count(), 1);
    }
}
