use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fobl::corpus::{self, CorpusEntry, CorpusError, Loaded};
use fobl::explorer::{explore, ExplorationBudget, ExplorationResult, ExploreError};
use fobl::minilang::{EntryPoint, ExecutionBudget};
use fobl::model::{ObliviousModel, StrategyKind};
use fobl::oracle::OracleSpec;
use fobl::report::{self, SpaceMetrics};

/// Exit codes.
const OK: u8 = 0;
const NOTHING_VALID: u8 = 1;
const BUDGET: u8 = 2;
const ERROR: u8 = 3;

/// Explore every way of carrying on past null dereferences in MiniLang programs.
#[derive(Debug, Parser)]
#[command(name = "fobl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explore the decision space of one program.
    Explore(ExploreArgs),
    /// Explore every corpus program and print one row per program.
    Corpus(CorpusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
    Table,
}

#[derive(Debug, Args)]
struct Budgets {
    /// Longest decision sequence before a path is cut off.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    max_seq_len: u64,
    /// Most runs of one exploration.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_runs: u64,
    /// Most interpreter steps of one run.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Deepest call stack of one run.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
}

impl Budgets {
    fn exploration(&self) -> ExplorationBudget {
        ExplorationBudget {
            max_sequence_length: self.max_seq_len as usize,
            max_runs: self.max_runs as usize,
            execution: ExecutionBudget { max_steps: self.max_steps, max_call_depth: self.max_depth as usize },
        }
    }
}

#[derive(Debug, Args)]
struct ExploreArgs {
    /// A `.ml0` file, or `corpus:<name>`.
    target: String,
    /// Overrides the program's `@oracle` directive.
    #[arg(long)]
    oracle: Option<OracleSpec>,
    /// Overrides the program's entry point, as `Class.method`.
    #[arg(long)]
    entry: Option<String>,
    /// Strategy kinds to switch off, in addition to `@disable`.
    #[arg(long, value_delimiter = ',')]
    disable: Vec<StrategyKind>,
    #[command(flatten)]
    budgets: Budgets,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Overrides every program's `@oracle` directive.
    #[arg(long)]
    oracle: Option<OracleSpec>,
    #[command(flatten)]
    budgets: Budgets,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Compare every program's metrics with its golden file.
    #[arg(long)]
    check: bool,
    /// Regenerate golden files in `FOBL_CORPUS_DIR` from the reference enumeration.
    #[arg(long, conflicts_with = "check")]
    bless: bool,
    /// Leave these programs out of the strategy-mix histogram.
    #[arg(long, value_delimiter = ',')]
    exclude_histogram: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ERROR } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Explore(args) => cmd_explore(args),
        Command::Corpus(args) => cmd_corpus(args),
    };
    ExitCode::from(code)
}

fn fail(message: impl std::fmt::Display) -> u8 {
    eprintln!("fobl: {message}");
    ERROR
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn load_target(target: &str, entry: Option<EntryPoint>) -> Result<Loaded, String> {
    if let Some(name) = target.strip_prefix("corpus:") {
        let found = corpus::find(name).map_err(|e| e.to_string())?;
        return corpus::prepare_source_with_entry(name, &found.source, entry).map_err(|e| e.to_string());
    }
    let path = Path::new(target);
    let source = std::fs::read_to_string(path).map_err(|e| format!("cannot read {target}: {e}"))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(target);
    corpus::prepare_source_with_entry(name, &source, entry).map_err(|e| format!("{target}: {e}"))
}

fn cmd_explore(args: ExploreArgs) -> u8 {
    let entry = match args.entry.as_deref().map(|e| e.split_once('.')) {
        None => None,
        Some(Some((class, method))) => Some(EntryPoint::new(class, method)),
        Some(None) => return fail(format!("--entry `{}` is not `Class.method`", args.entry.unwrap_or_default())),
    };
    let mut loaded = match load_target(&args.target, entry) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    if let Some(oracle) = args.oracle {
        loaded.oracle = oracle;
    }
    if !args.disable.is_empty() {
        let kinds: Vec<StrategyKind> = loaded.model.disabled().chain(args.disable.iter().copied()).collect();
        loaded.model = ObliviousModel::without(kinds);
    }

    let budget = args.budgets.exploration();
    let (result, code) = match explore(&loaded.program, &loaded.entry, &loaded.model, loaded.oracle, budget) {
        Ok(result) => {
            let code = if result.sequences.iter().any(|s| s.verdict.is_valid()) { OK } else { NOTHING_VALID };
            (result, code)
        }
        Err(ExploreError::BudgetExceeded(partial)) => {
            eprintln!("fobl: {}: run budget of {} exhausted; results are partial", loaded.name, budget.max_runs);
            (*partial, BUDGET)
        }
        Err(e) => return fail(format!("{}: {e}", loaded.name)),
    };

    let metrics = report::summarize(&result, loaded.oracle);
    let text = match args.format {
        Format::Json => report::to_json(&result, &metrics),
        Format::Csv => report::to_csv(&[(loaded.name.clone(), metrics)]),
        Format::Dot => report::to_dot(&result.tree),
        Format::Table => explore_table(&loaded.name, &result, metrics),
    };
    if let Err(e) = emit(args.output.as_deref(), &text) {
        return fail(e);
    }
    code
}

fn explore_table(name: &str, result: &ExplorationResult, metrics: SpaceMetrics) -> String {
    let mut out = report::to_table(&[(name.to_string(), metrics)], &[]);
    out.push_str("\nsequences:\n");
    for s in &result.sequences {
        let labels = s.labels();
        let path = if labels.is_empty() { "(none)".to_string() } else { labels.join(" -> ") };
        out.push_str(&format!("  {:<18} {path}\n", s.verdict.as_str()));
    }
    out
}

struct Row {
    name: String,
    metrics: Option<SpaceMetrics>,
    code: u8,
}

fn run_entry(entry: &CorpusEntry, args: &CorpusArgs) -> Row {
    let row = |metrics, code| Row { name: entry.name.clone(), metrics, code };
    let mut loaded = match corpus::prepare(entry) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("fobl: {e}");
            return row(None, ERROR);
        }
    };
    if let Some(oracle) = args.oracle {
        loaded.oracle = oracle;
    }
    let budget = args.budgets.exploration();

    if args.bless {
        let dir = corpus::corpus_dir().expect("checked before running");
        let result = corpus::derive_golden(&loaded, budget).and_then(|golden| {
            let path = corpus::golden_path(&dir, &entry.name);
            std::fs::write(&path, golden.to_json()).map_err(|source| CorpusError::Io { path, source })?;
            Ok(golden)
        });
        return match result {
            Ok(golden) => row(Some(golden.metrics), OK),
            Err(e) => {
                eprintln!("fobl: {}: {e}", entry.name);
                row(None, if matches!(e, CorpusError::Explore(_)) { BUDGET } else { ERROR })
            }
        };
    }

    let (result, mut code) = match explore(&loaded.program, &loaded.entry, &loaded.model, loaded.oracle, budget) {
        Ok(result) => (result, OK),
        Err(ExploreError::BudgetExceeded(partial)) => {
            eprintln!("fobl: {}: run budget exhausted; row is partial", entry.name);
            (*partial, BUDGET)
        }
        Err(e) => {
            eprintln!("fobl: {}: {e}", entry.name);
            return row(None, ERROR);
        }
    };
    let metrics = report::summarize(&result, loaded.oracle);
    if args.check {
        match corpus::golden(entry) {
            Ok(Some(golden)) if golden.metrics == metrics => {}
            Ok(Some(_)) => {
                eprintln!("fobl: {}: metrics differ from the golden file", entry.name);
                code = code.max(NOTHING_VALID);
            }
            Ok(None) => {
                eprintln!("fobl: {}: no golden file", entry.name);
                code = code.max(NOTHING_VALID);
            }
            Err(e) => {
                eprintln!("fobl: {e}");
                code = ERROR;
            }
        }
    }
    row(Some(metrics), code)
}

fn cmd_corpus(args: CorpusArgs) -> u8 {
    if args.format == Format::Dot {
        return fail("`corpus` does not support --format dot");
    }
    if args.bless && corpus::corpus_dir().is_none() {
        return fail(format!("--bless needs {} to point at the corpus directory", corpus::CORPUS_DIR_VAR));
    }
    let entries = match corpus::list_programs() {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let mut rows: Vec<Row> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries.iter().map(|entry| scope.spawn(|| run_entry(entry, &args))).collect();
        handles.into_iter().map(|h| h.join().expect("exploration thread panicked")).collect()
    });
    rows.sort_by(|a, b| a.name.cmp(&b.name));

    let code = rows.iter().map(|r| r.code).max().unwrap_or(OK);
    let table: Vec<(String, SpaceMetrics)> =
        rows.into_iter().filter_map(|r| r.metrics.map(|m| (r.name, m))).collect();
    let text = match args.format {
        Format::Csv => report::to_csv(&table),
        Format::Table => report::to_table(&table, &args.exclude_histogram),
        Format::Json => corpus_json(&table, &args.exclude_histogram),
        Format::Dot => unreachable!("rejected above"),
    };
    if let Err(e) = emit(args.output.as_deref(), &text) {
        return fail(e);
    }
    code
}

fn corpus_json(rows: &[(String, SpaceMetrics)], exclude: &[String]) -> String {
    let entries: Vec<serde_json::Value> = rows
        .iter()
        .map(|(name, m)| serde_json::json!({ "name": name, "metrics": m }))
        .collect();
    let value = serde_json::json!({
        "programs": entries,
        "total": SpaceMetrics::total(rows.iter().map(|(_, m)| m)),
        "histogram": report::histogram(rows, exclude),
        "histogram_excludes": exclude,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
    text.push('\n');
    text
}
