//! Built-in example programs and the `ladder` generator.
//!
//! Each program is a `.ml0` file whose leading comment lines may carry
//! directives:
//!
//! ```text
//! // @entry Main.test
//! // @oracle asserting
//! // @disable SKIP-LINE RET-NEW
//! ```
//!
//! Golden metrics live next to each program in `<name>.expected.json` and are
//! produced by [`derive_golden`], never by hand. Setting `FOBL_CORPUS_DIR`
//! reads programs and goldens from that directory instead of the embedded
//! copies.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{enumerate_reference, ExplorationBudget, ExploreError};
use crate::minilang::{compile, EntryPoint, FrontendError, TypedProgram};
use crate::model::{ObliviousModel, StrategyKind};
use crate::oracle::OracleSpec;
use crate::report::SpaceMetrics;

pub const CORPUS_DIR_VAR: &str = "FOBL_CORPUS_DIR";

const EMBEDDED: &[(&str, &str, &str)] = &[
    ("barren", include_str!("../corpus/barren.ml0"), include_str!("../corpus/barren.expected.json")),
    ("fertile", include_str!("../corpus/fertile.ml0"), include_str!("../corpus/fertile.expected.json")),
    ("ladder", include_str!("../corpus/ladder.ml0"), include_str!("../corpus/ladder.expected.json")),
    (
        "session_date",
        include_str!("../corpus/session_date.ml0"),
        include_str!("../corpus/session_date.expected.json"),
    ),
    (
        "subline_intersection",
        include_str!("../corpus/subline_intersection.ml0"),
        include_str!("../corpus/subline_intersection.expected.json"),
    ),
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no corpus entry named `{0}`")]
    NotFound(String),
    #[error("{name}: {source}")]
    Frontend { name: String, source: FrontendError },
    #[error("{name}: line {line}: {message}")]
    Directive { name: String, line: usize, message: String },
    #[error("{name}: no entry point (add `// @entry Class.method`)")]
    NoEntry { name: String },
    #[error("{name}: golden file is malformed: {source}")]
    Golden { name: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("ladder({n}, {m}) is out of range (both must be in 1..=6)")]
    LadderRange { n: usize, m: usize },
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

/// Settings read from a program's leading comment lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Directives {
    pub entry: Option<EntryPoint>,
    pub oracle: OracleSpec,
    pub disabled: Vec<StrategyKind>,
}

impl Directives {
    pub fn model(&self) -> ObliviousModel {
        ObliviousModel::without(self.disabled.iter().copied())
    }
}

pub fn parse_directives(name: &str, source: &str) -> Result<Directives, CorpusError> {
    let mut out = Directives::default();
    for (i, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(comment) = line.strip_prefix("//") else { break };
        let Some(directive) = comment.trim().strip_prefix('@') else { continue };
        let err = |message: String| CorpusError::Directive { name: name.to_string(), line: i + 1, message };
        let mut words = directive.split_whitespace();
        match words.next() {
            Some("entry") => {
                let target = words.next().ok_or_else(|| err("`@entry` needs `Class.method`".into()))?;
                let (class, method) =
                    target.split_once('.').ok_or_else(|| err(format!("`{target}` is not `Class.method`")))?;
                out.entry = Some(EntryPoint::new(class, method));
            }
            Some("oracle") => {
                let mode = words.next().unwrap_or_default();
                out.oracle = mode.parse().map_err(|e| err(format!("{e}")))?;
            }
            Some("disable") => {
                for word in words {
                    out.disabled.push(word.parse().map_err(|e| err(format!("{e}")))?);
                }
            }
            Some(other) => return Err(err(format!("unknown directive `@{other}`"))),
            None => return Err(err("empty directive".into())),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    /// How the values were produced; always `enumerate_reference`.
    pub derived_by: String,
    pub metrics: SpaceMetrics,
}

pub const GOLDEN_PROVENANCE: &str = "enumerate_reference";

impl Golden {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("golden serializes");
        text.push('\n');
        text
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    /// Sidecar golden text, if present.
    pub golden: Option<String>,
}

/// A corpus program ready to explore.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub program: TypedProgram,
    pub entry: EntryPoint,
    pub oracle: OracleSpec,
    pub model: ObliviousModel,
}

/// Corpus directory in effect: `FOBL_CORPUS_DIR` if set, else `None` for the
/// embedded copies.
pub fn corpus_dir() -> Option<PathBuf> {
    std::env::var_os(CORPUS_DIR_VAR).map(PathBuf::from)
}

/// Entries sorted by name.
pub fn list_programs() -> Result<Vec<CorpusEntry>, CorpusError> {
    match corpus_dir() {
        Some(dir) => list_dir(&dir),
        None => Ok(EMBEDDED
            .iter()
            .map(|(name, source, golden)| CorpusEntry {
                name: name.to_string(),
                source: source.to_string(),
                golden: Some(golden.to_string()),
            })
            .collect()),
    }
}

pub fn list_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    fn io(path: &Path) -> impl Fn(std::io::Error) -> CorpusError + '_ {
        move |source| CorpusError::Io { path: path.to_path_buf(), source }
    }
    let mut out = Vec::new();
    for item in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = item.map_err(io(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("ml0") {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        let source = std::fs::read_to_string(&path).map_err(io(&path))?;
        let golden_path = golden_path(dir, name);
        let golden = match std::fs::read_to_string(&golden_path) {
            Ok(text) => Some(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(CorpusError::Io { path: golden_path, source: e }),
        };
        out.push(CorpusEntry { name: name.to_string(), source, golden });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

pub fn golden_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.expected.json"))
}

pub fn find(name: &str) -> Result<CorpusEntry, CorpusError> {
    list_programs()?.into_iter().find(|e| e.name == name).ok_or_else(|| CorpusError::NotFound(name.to_string()))
}

pub fn load(name: &str) -> Result<Loaded, CorpusError> {
    prepare(&find(name)?)
}

/// Compiles a program and resolves its directives and entry point.
pub fn prepare_source(name: &str, source: &str) -> Result<Loaded, CorpusError> {
    prepare_source_with_entry(name, source, None)
}

/// As [`prepare_source`], with `entry` taking precedence over `@entry`.
pub fn prepare_source_with_entry(
    name: &str,
    source: &str,
    entry: Option<EntryPoint>,
) -> Result<Loaded, CorpusError> {
    let directives = parse_directives(name, source)?;
    let program = compile(source).map_err(|source| CorpusError::Frontend { name: name.to_string(), source })?;
    let entry = match entry.or_else(|| directives.entry.clone()) {
        Some(entry) => entry,
        None => EntryPoint::find_test(&program).ok_or_else(|| CorpusError::NoEntry { name: name.to_string() })?,
    };
    Ok(Loaded { name: name.to_string(), entry, oracle: directives.oracle, model: directives.model(), program })
}

pub fn prepare(entry: &CorpusEntry) -> Result<Loaded, CorpusError> {
    prepare_source(&entry.name, &entry.source)
}

pub fn golden(entry: &CorpusEntry) -> Result<Option<Golden>, CorpusError> {
    entry
        .golden
        .as_deref()
        .map(|text| serde_json::from_str(text).map_err(|source| CorpusError::Golden { name: entry.name.clone(), source }))
        .transpose()
}

/// Metrics from the brute-force reference enumeration.
pub fn derive_golden(loaded: &Loaded, budget: ExplorationBudget) -> Result<Golden, CorpusError> {
    let reference = enumerate_reference(&loaded.program, &loaded.entry, &loaded.model, loaded.oracle, budget)?;
    let metrics = SpaceMetrics::from_sequences(&reference.sequences, reference.encountered_points.len(), loaded.oracle);
    Ok(Golden { derived_by: GOLDEN_PROVENANCE.to_string(), metrics })
}

/// Source of a program with `n` sequential, independent failure points that
/// each admit exactly `m` decisions.
///
/// One decision comes from a null `opaque` receiver in a condition, where
/// only returning is possible. A statement adds skipping, a constructible
/// receiver adds a fresh instance, and each non-null parameter of the
/// receiver's type adds one reuse candidate.
pub fn ladder_source(n: usize, m: usize) -> Result<String, CorpusError> {
    if !(1..=6).contains(&n) || !(1..=6).contains(&m) {
        return Err(CorpusError::LadderRange { n, m });
    }
    let params: Vec<&str> = ["a", "b", "c"].into_iter().take(m.saturating_sub(3)).collect();
    let decl: Vec<String> = params.iter().map(|p| format!("Part {p}")).collect();
    let args: Vec<&str> = params.iter().map(|_| "new Part()").collect();
    let site = match m {
        1 => "if (this.hole.ready) {\n        }",
        2 => "this.hole.touch();",
        _ => "this.part.touch();",
    };

    let mut out = format!("// @entry Main.test\n// @oracle default\n//\n// ladder({n}, {m})\n\n");
    out.push_str("class Part {\n    void touch() {\n    }\n}\n\n");
    out.push_str("opaque class Hole {\n    bool ready;\n\n    void touch() {\n    }\n}\n\n");
    out.push_str("class Main {\n    Part part;\n    Hole hole;\n");
    for i in 1..=n {
        let _ = write!(out, "\n    void step{i}({}) {{\n        {site}\n    }}\n", decl.join(", "));
    }
    out.push_str("\n    void test() {\n");
    for i in 1..=n {
        let _ = writeln!(out, "        this.step{i}({});", args.join(", "));
    }
    out.push_str("    }\n}\n");
    Ok(out)
}

pub fn ladder(n: usize, m: usize) -> Result<TypedProgram, CorpusError> {
    let source = ladder_source(n, m)?;
    compile(&source).map_err(|source| CorpusError::Frontend { name: format!("ladder({n}, {m})"), source })
}
