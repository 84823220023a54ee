//! `labelcc`: run, sweep, verify and generate from the command line.
//!
//! Exit codes: 0 success, 1 a check or verification failed, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use labelcc::battery::{Battery, CheckGroup, CheckOutcome};
use labelcc::drivers::trace::write_metrics_csv;
use labelcc::drivers::{Fault, HookSet, MetricsRow, RunError, RunOptions};
use labelcc::generators::Recipe;
use labelcc::graph::parse_edge_list;
use labelcc::oracle::verify_final;
use labelcc::primitives::LoopMode;
use labelcc::suite::{full_suite, gnp_suite, structured_suite, SuiteGraph, GNP_SEEDS};
use labelcc::{run, AlgorithmKind, AlgorithmSpec, Graph};

const OUT_DIR_ENV: &str = "LABELCC_OUT_DIR";

#[derive(Parser)]
#[command(name = "labelcc", version, about = "Concurrent connected-components labeling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one graph and write its trace and CSV row.
    Run(RunArgs),
    /// Run algorithms over a family of graphs and write one CSV row per run.
    Sweep(SweepArgs),
    /// Run the invariant battery on a built-in suite.
    Verify(VerifyArgs),
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Graph recipe, e.g. `path:1025`, `grid:10,10`, `gnp:200,0.03,9`, `W:3`.
    #[arg(long)]
    recipe: Option<String>,
    /// Edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SpecArgs {
    #[arg(long, default_value_t = 1)]
    shortcuts: u32,
    #[arg(long, value_enum, default_value_t = LoopArg::Delete)]
    loop_mode: LoopArg,
    /// RA only.
    #[arg(long)]
    strengthened_deletion: bool,
    /// Arbitrary-pick order and coin seed for SV, AS and REIF.
    #[arg(long, default_value_t = 0)]
    policy_seed: u64,
    /// Record the spanning forest (R and RA).
    #[arg(long)]
    spanning_forest: bool,
}

impl SpecArgs {
    fn spec(&self, kind: AlgorithmKind) -> AlgorithmSpec {
        let mut spec = AlgorithmSpec::new(kind)
            .with_shortcuts(self.shortcuts)
            .with_loop_mode(self.loop_mode.into())
            .with_policy_seed(self.policy_seed);
        spec.strengthened_deletion = self.strengthened_deletion;
        spec.record_spanning_forest = self.spanning_forest;
        spec
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopArg {
    Delete,
    RetainLoop,
}

impl From<LoopArg> for LoopMode {
    fn from(l: LoopArg) -> Self {
        match l {
            LoopArg::Delete => LoopMode::Delete,
            LoopArg::RetainLoop => LoopMode::RetainLoop,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HookArg {
    None,
    Standard,
    All,
    Acyclic,
    Monotone,
    GreenTarget,
    GreenTargetStrong,
    ColorLemmas,
    RootPaths,
    Distance,
    Flat,
}

fn hook_set(args: &[HookArg]) -> HookSet {
    if args.is_empty() {
        return HookSet::standard();
    }
    let mut set = HookSet::NONE;
    for a in args {
        match a {
            HookArg::None => set = HookSet::NONE,
            HookArg::Standard => {
                let s = HookSet::standard();
                set.acyclic |= s.acyclic;
                set.monotone |= s.monotone;
                set.flat |= s.flat;
            }
            HookArg::All => set = HookSet::all(),
            HookArg::Acyclic => set.acyclic = true,
            HookArg::Monotone => set.monotone = true,
            HookArg::GreenTarget => set.green_target = true,
            HookArg::GreenTargetStrong => {
                set.green_target = true;
                set.green_target_strong = true;
            }
            HookArg::ColorLemmas => set.color_lemmas = true,
            HookArg::RootPaths => set.root_paths = true,
            HookArg::Distance => set.distance = true,
            HookArg::Flat => set.flat = true,
        }
    }
    set
}

/// `skip-shortcut` or `skip-shortcut:<round>`.
fn parse_fault(s: &str) -> Result<Fault, String> {
    match s.split_once(':') {
        None if s == "skip-shortcut" => Ok(Fault::SkipShortcut { round: None }),
        Some(("skip-shortcut", r)) => {
            let round = r.parse().map_err(|_| format!("bad round `{r}`"))?;
            Ok(Fault::SkipShortcut { round: Some(round) })
        }
        _ => Err(format!("unknown fault `{s}`, expected skip-shortcut[:round]")),
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    alg: AlgorithmKind,
    #[command(flatten)]
    source: GraphSource,
    #[command(flatten)]
    spec: SpecArgs,
    /// Hooks to attach; repeat or comma-separate. Defaults to `standard`.
    #[arg(long, value_enum, value_delimiter = ',')]
    hooks: Vec<HookArg>,
    /// Record per-tree data and colorings each round.
    #[arg(long)]
    instrument: bool,
    /// Keep the parent array after every primitive.
    #[arg(long)]
    snapshots: bool,
    #[arg(long, value_parser = parse_fault)]
    inject_fault: Option<Fault>,
    #[arg(long)]
    round_limit: Option<u64>,
    /// JSON trace path; defaults to `<out-dir>/<alg>-<graph>.json`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// CSV path; defaults to `<out-dir>/<alg>-<graph>.csv`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Defaults to $LABELCC_OUT_DIR, else the current directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Algorithms, comma-separated, or `all`.
    #[arg(long, value_delimiter = ',', required = true)]
    alg: Vec<String>,
    /// Recipe template; `{i}`, `{2^i}`, `{2^i+1}` and `{seed}` are substituted.
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    recipe: Option<String>,
    /// Built-in suite instead of a recipe.
    #[arg(long, value_enum)]
    suite: Option<SuiteArg>,
    /// Inclusive range for `{i}`, as `a..b`.
    #[arg(long, value_parser = parse_range)]
    range: Option<(u64, u64)>,
    /// Inclusive range for `{seed}`, as `a..b`.
    #[arg(long, value_parser = parse_range)]
    seeds: Option<(u64, u64)>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    hooks: Vec<HookArg>,
    /// Defaults to `<out-dir>/sweep.csv`.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Structured,
    Gnp,
    Full,
}

fn suite_graphs(s: SuiteArg) -> Vec<SuiteGraph> {
    match s {
        SuiteArg::Structured => structured_suite(),
        SuiteArg::Gnp => gnp_suite(GNP_SEEDS),
        SuiteArg::Full => full_suite(),
    }
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range end `{b}`"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

#[derive(Args)]
struct VerifyArgs {
    /// Check groups to run; all when omitted.
    #[arg(long, value_delimiter = ',')]
    only: Vec<CheckGroup>,
    #[arg(long, value_enum, default_value_t = SuiteArg::Full)]
    suite: SuiteArg,
    #[arg(long, value_parser = parse_fault)]
    inject_fault: Option<Fault>,
    /// Print every failing check, not just the first per row.
    #[arg(long)]
    verbose: bool,
    /// Also write all outcomes as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    recipe: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error that maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("writing in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.persist(path).map_err(|e| anyhow!(e.error)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn load_graph(source: &GraphSource) -> Result<(String, Graph, Option<u32>)> {
    if let Some(r) = &source.recipe {
        let recipe: Recipe = r.parse().map_err(|e| usage(format!("{e}")))?;
        let g = recipe.build().map_err(|e| usage(format!("{e}")))?;
        return Ok((recipe.to_string(), g, recipe.analytic_diameter()));
    }
    let path = source.graph.as_ref().expect("clap enforces one source");
    let text = fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    let g = parse_edge_list(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into());
    Ok((label, g, None))
}

fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, rows)?;
    Ok(buf)
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let (label, g, d) = load_graph(&a.source)?;
    let spec = a.spec.spec(a.alg);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let opts = RunOptions {
        hooks: hook_set(&a.hooks),
        instrument: a.instrument,
        snapshots: a.snapshots,
        fault: a.inject_fault,
        round_limit: a.round_limit,
    };
    let trace = match run(&spec, &g, &opts) {
        Ok(t) => t,
        Err(e @ RunError::InvalidSpec(_)) => return Err(usage(e.to_string())),
        Err(e) => {
            eprintln!("{} on {label}: {e}", spec.kind);
            return Ok(false);
        }
    };
    let verdict = verify_final(&trace.final_forest, &g, spec.kind.is_min_labeling());
    let ok = verdict.is_ok();

    let dir = out_dir(a.out_dir);
    let stem = format!("{}-{}", spec.kind, file_stem(&label));
    let trace_path = a.trace.unwrap_or_else(|| dir.join(format!("{stem}.json")));
    let csv_path = a.csv.unwrap_or_else(|| dir.join(format!("{stem}.csv")));
    write_atomic(&trace_path, trace.to_json().as_bytes())?;
    write_atomic(&csv_path, &metrics_csv(&[MetricsRow::from_trace(&label, &trace, d, ok)])?)?;

    println!(
        "{} on {label}: n={} m={} rounds={} waves={} messages={} shortcut_passes={} {}",
        spec.kind,
        g.n(),
        g.m(),
        trace.totals.rounds,
        trace.totals.waves,
        trace.totals.messages,
        trace.totals.shortcut_passes,
        if ok { "verified" } else { "FAILED" }
    );
    if let Err(c) = verdict {
        eprintln!("verification failed: {c}");
    }
    Ok(ok)
}

fn parse_algs(list: &[String]) -> Result<Vec<AlgorithmKind>> {
    let mut out = Vec::new();
    for s in list {
        if s.eq_ignore_ascii_case("all") {
            out.extend(AlgorithmKind::ALL);
        } else {
            out.push(s.parse().map_err(|e| usage(format!("{e}")))?);
        }
    }
    out.dedup();
    Ok(out)
}

/// Expands `{i}`, `{2^i}`, `{2^i+1}` and `{seed}` over the given ranges.
fn expand_template(template: &str, range: Option<(u64, u64)>, seeds: Option<(u64, u64)>) -> Result<Vec<String>> {
    let uses_i = ["{i}", "{2^i}", "{2^i+1}"].iter().any(|p| template.contains(p));
    let uses_seed = template.contains("{seed}");
    let is = match (uses_i, range) {
        (true, Some((a, b))) => (a..=b).map(Some).collect(),
        (true, None) => return Err(usage("recipe uses {i} but --range is missing")),
        (false, _) => vec![None],
    };
    let ss = match (uses_seed, seeds) {
        (true, Some((a, b))) => (a..=b).map(Some).collect(),
        (true, None) => return Err(usage("recipe uses {seed} but --seeds is missing")),
        (false, _) => vec![None],
    };
    let mut out = Vec::new();
    for i in &is {
        for s in &ss {
            let mut r = template.to_string();
            if let Some(i) = i {
                if *i >= 32 {
                    return Err(usage(format!("2^{i} is out of range")));
                }
                r = r
                    .replace("{2^i+1}", &((1u64 << i) + 1).to_string())
                    .replace("{2^i}", &(1u64 << i).to_string())
                    .replace("{i}", &i.to_string());
            }
            if let Some(s) = s {
                r = r.replace("{seed}", &s.to_string());
            }
            out.push(r);
        }
    }
    Ok(out)
}

fn cmd_sweep(a: SweepArgs) -> Result<bool> {
    let algs = parse_algs(&a.alg)?;
    let graphs: Vec<SuiteGraph> = match (&a.recipe, a.suite) {
        (Some(t), _) => expand_template(t, a.range, a.seeds)?
            .iter()
            .map(|r| r.parse::<Recipe>().map(SuiteGraph::new).map_err(|e| usage(format!("{e}"))))
            .collect::<Result<_>>()?,
        (None, Some(s)) => suite_graphs(s),
        (None, None) => return Err(usage("one of --recipe or --suite is required")),
    };
    for kind in &algs {
        a.spec.spec(*kind).validate().map_err(|e| usage(e.to_string()))?;
    }
    let opts = RunOptions { hooks: hook_set(&a.hooks), ..RunOptions::default() };
    let jobs: Vec<(&SuiteGraph, AlgorithmKind)> =
        graphs.iter().flat_map(|g| algs.iter().map(move |&k| (g, k))).collect();
    let rows: Vec<(MetricsRow, Option<String>)> = jobs
        .par_iter()
        .map(|&(entry, kind)| {
            let label = entry.label();
            let g = match entry.build() {
                Ok(g) => g,
                Err(e) => return (failed_row(&label, kind), Some(format!("{label}: {e}"))),
            };
            let spec = a.spec.spec(kind);
            match run(&spec, &g, &opts) {
                Ok(t) => {
                    let verdict = verify_final(&t.final_forest, &g, kind.is_min_labeling());
                    let err = verdict.err().map(|c| format!("{kind} on {label}: {c}"));
                    let row = MetricsRow::from_trace(&label, &t, entry.recipe.analytic_diameter(), err.is_none());
                    (row, err)
                }
                Err(e) => {
                    let mut row = failed_row(&label, kind);
                    row.m = g.m();
                    (row, Some(format!("{kind} on {label}: {e}")))
                }
            }
        })
        .collect();
    let (rows, errors): (Vec<MetricsRow>, Vec<Option<String>>) = rows.into_iter().unzip();
    let failures: Vec<String> = errors.into_iter().flatten().collect();
    for f in &failures {
        eprintln!("failed: {f}");
    }
    let path = a.csv.unwrap_or_else(|| out_dir(a.out_dir).join("sweep.csv"));
    write_atomic(&path, &metrics_csv(&rows)?)?;
    println!("{} runs, {} failed, written to {}", rows.len(), failures.len(), path.display());
    Ok(failures.is_empty())
}

fn failed_row(label: &str, kind: AlgorithmKind) -> MetricsRow {
    MetricsRow {
        graph: label.to_string(),
        algorithm: kind.to_string(),
        n: 0,
        m: 0,
        d: None,
        rounds: 0,
        waves: 0,
        messages: 0,
        shortcut_passes: 0,
        ok: false,
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let groups = if a.only.is_empty() { CheckGroup::ALL.to_vec() } else { a.only.clone() };
    let battery = Battery { groups, fault: a.inject_fault };
    let suite = suite_graphs(a.suite);
    let outcomes: Vec<CheckOutcome> = suite.par_iter().flat_map_iter(|entry| battery.check(entry)).collect();

    // one table row per (group, check)
    let mut table: BTreeMap<(CheckGroup, &str), (usize, Vec<&CheckOutcome>)> = BTreeMap::new();
    for o in &outcomes {
        let row = table.entry((o.group, o.check.as_str())).or_default();
        row.0 += 1;
        if !o.passed {
            row.1.push(o);
        }
    }
    println!("{:<12} {:<18} {:>6} {:>6}  result", "group", "check", "graphs", "failed");
    for ((group, check), (total, failed)) in &table {
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!("{:<12} {:<18} {:>6} {:>6}  {verdict}", group.name(), check, total, failed.len());
        let shown = if a.verbose { failed.len() } else { failed.len().min(1) };
        for o in &failed[..shown] {
            println!("    {}: {}", o.graph, o.detail);
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} checks on {} graphs, {failed} failed", outcomes.len(), suite.len());
    if let Some(path) = &a.json {
        write_atomic(path, serde_json::to_string_pretty(&outcomes)?.as_bytes())?;
    }
    Ok(failed == 0)
}

fn cmd_generate(a: GenerateArgs) -> Result<bool> {
    let recipe: Recipe = a.recipe.parse().map_err(|e| usage(format!("{e}")))?;
    let g = recipe.build().map_err(|e| usage(format!("{e}")))?;
    let header = vec![
        format!("generated by labelcc {} from recipe {recipe}", env!("CARGO_PKG_VERSION")),
        format!("n={} m={}", g.n(), g.m()),
    ];
    let text = g.to_edge_list_with_comments(&header);
    match &a.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            println!("{recipe}: n={} m={} written to {}", g.n(), g.m(), path.display());
        }
        None => {
            if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
                bail!("writing stdout: {e}");
            }
        }
    }
    Ok(true)
}
