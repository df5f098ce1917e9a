//! The `belcal` command line: loads a theory file, evaluates belief /
//! knowledge / marginal queries, and emits human or machine reports.
//!
//! Exit codes: 0 — every query succeeded; 1 — at least one query failed to
//! evaluate (degenerate belief, dimension limits, …); 2 — the theory or a
//! query did not parse or validate.

pub mod acceptance;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use bayes_oracle::{chained_posterior, enumerate_bel, OracleError};
use belief_engine::{evaluate, Backend, EngineConfig, Histogram, QueryAnswer};
use theory_dsl::ast::{Overrides, Query, Severity, TheorySpec};
use theory_dsl::{parse_query, parse_theory, validate};

/// Grid cells per dimension for the Bayesian-conditioning reference oracle.
const ORACLE_CELLS: usize = 400;

#[derive(Parser)]
#[command(
    name = "belcal",
    version,
    about = "Belief projection for action theories with noisy effectors and sensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Evaluate queries against a theory file and print a report
    Run(RunArgs),
    /// Evaluate one marginal query and emit its histogram as CSV
    Plotdata(PlotdataArgs),
    /// Run the built-in acceptance table over the bundled theories
    TestPaper,
}

#[derive(Args)]
pub struct RunArgs {
    /// Theory file (.bat)
    pub theory: PathBuf,
    /// A query, e.g. 'bel (h <= 9) after [sonar(5)]'; repeatable
    #[arg(short = 'q', long = "query", required = true)]
    pub queries: Vec<String>,
    #[command(flatten)]
    pub flags: EngineFlags,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Directory to write histogram CSV files into
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the reference oracles on bel queries and print the deltas
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args)]
pub struct PlotdataArgs {
    /// Theory file (.bat)
    pub theory: PathBuf,
    /// A marginal query, e.g. 'marginal h after [move(4)] bins=16 range=0,8'
    #[arg(short = 'q', long = "query")]
    pub query: String,
    #[command(flatten)]
    pub flags: EngineFlags,
    /// Directory to write the CSV into (default: CSV on standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Engine knobs; command-line flags take precedence over per-query
/// overrides, which take precedence over the defaults.
#[derive(Args, Clone, Copy, Default)]
pub struct EngineFlags {
    /// Integration backend
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Monte-Carlo sample count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte-Carlo base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quadrature points per continuous dimension
    #[arg(long)]
    pub grid: Option<usize>,
    /// Gaussian truncation radius, in standard deviations
    #[arg(long = "trunc-sigmas")]
    pub trunc_sigmas: Option<f64>,
    /// Half-width that `=` and `!=` tolerate on reals
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Quad,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

impl EngineFlags {
    fn apply(&self, mut cfg: EngineConfig) -> EngineConfig {
        if let Some(b) = self.backend {
            cfg.backend = match b {
                BackendArg::Quad => Backend::Quad,
                BackendArg::Mc => Backend::Mc,
            };
        }
        if let Some(n) = self.samples {
            cfg.mc_samples = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.grid {
            cfg.quad_points_per_dim = n;
        }
        if let Some(t) = self.trunc_sigmas {
            cfg.gauss_truncation_sigmas = t;
        }
        if let Some(e) = self.eps {
            cfg.equality_epsilon = e;
        }
        cfg
    }
}

/// Top-level dispatch; returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    init_threads();
    match cli.cmd {
        Cmd::Run(args) => run(args),
        Cmd::Plotdata(args) => plotdata(args),
        Cmd::TestPaper => test_paper(),
    }
}

/// Honors `BELCAL_THREADS` by capping the global worker pool. Results do not
/// depend on the cap; only wall time does.
fn init_threads() {
    if let Some(n) = threads_env() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn threads_env() -> Option<usize> {
    std::env::var("BELCAL_THREADS").ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct RunReport {
    pub theory: TheoryInfo,
    /// The effective run-level configuration; per-query records carry their
    /// own copy only when query overrides changed it.
    pub config: EngineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub queries: Vec<QueryRecord>,
}

#[derive(Serialize)]
pub struct TheoryInfo {
    pub path: String,
    pub name: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct QueryRecord {
    pub query: String,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<EngineConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<QueryAnswer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

#[derive(Serialize)]
pub struct OracleCheck {
    /// Which reference computed the value: `enumeration` or
    /// `bayes-conditioning`.
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Engine minus oracle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn run(args: RunArgs) -> i32 {
    let Some((spec, src)) = load_theory(&args.theory) else {
        return 2;
    };
    let mut queries = Vec::with_capacity(args.queries.len());
    for (i, text) in args.queries.iter().enumerate() {
        match parse_query(text, &spec) {
            Ok(q) => queries.push(q),
            Err(e) => {
                eprintln!("query {}: {e}", i + 1);
                return 2;
            }
        }
    }
    if let Some(dir) = &args.out {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("{}: {e}", dir.display());
            return 1;
        }
    }

    let base = args.flags.apply(EngineConfig::default());
    let mut records = Vec::with_capacity(queries.len());
    let mut failed = false;

    for (i, (text, query)) in args.queries.iter().zip(&queries).enumerate() {
        let cfg = args.flags.apply(EngineConfig::default().with_overrides(&query.overrides));
        let clean = Query { overrides: Overrides::default(), ..query.clone() };
        let start = Instant::now();
        let outcome = evaluate(&spec, &clean, &cfg);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;

        let mut record = QueryRecord {
            query: text.clone(),
            wall_ms,
            config: (cfg != base).then_some(cfg),
            answer: None,
            error: None,
            histogram_csv: None,
            oracle: None,
        };
        match outcome {
            Ok(answer) => {
                if let (QueryAnswer::Marginal(hist), Some(dir)) = (&answer, &args.out) {
                    let path = dir.join(format!("q{}_{}.csv", i + 1, hist.fluent));
                    match write_histogram_csv_file(hist, &path) {
                        Ok(()) => record.histogram_csv = Some(path.display().to_string()),
                        Err(e) => {
                            eprintln!("{}: {e}", path.display());
                            failed = true;
                        }
                    }
                }
                if args.oracle {
                    record.oracle = Some(oracle_check(&spec, &clean, &answer));
                }
                record.answer = Some(answer);
            }
            Err(e) => {
                record.error = Some(e.to_string());
                failed = true;
            }
        }
        records.push(record);
    }

    let report = RunReport {
        theory: TheoryInfo {
            path: args.theory.display().to_string(),
            name: spec.name.to_string(),
            sha256: sha256_hex(src.as_bytes()),
        },
        config: base,
        threads: threads_env(),
        queries: records,
    };
    match args.format {
        Format::Json => match serde_json::to_string_pretty(&report) {
            Ok(s) => println!("{s}"),
            Err(e) => {
                eprintln!("report serialization failed: {e}");
                return 1;
            }
        },
        Format::Text => print_text(&report),
    }
    if failed {
        1
    } else {
        0
    }
}

/// Reads, parses, and validates a theory file, reporting every problem as
/// `path:line:col: message`. Warnings go to standard error and do not block.
fn load_theory(path: &Path) -> Option<(TheorySpec, String)> {
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return None;
        }
    };
    let spec = match parse_theory(&src) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("{}:{e}", path.display());
            return None;
        }
    };
    let mut blocked = false;
    for d in validate(&spec) {
        eprintln!("{}:{d}", path.display());
        blocked |= d.severity == Severity::Error;
    }
    if blocked {
        return None;
    }
    Some((spec, src))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn print_text(report: &RunReport) {
    println!(
        "theory {} ({}, sha256 {})",
        report.theory.name,
        report.theory.path,
        &report.theory.sha256[..12]
    );
    println!("config {}", config_line(&report.config));
    for (i, r) in report.queries.iter().enumerate() {
        println!("[{}] {}", i + 1, r.query);
        if let Some(cfg) = &r.config {
            println!("    config {}", config_line(cfg));
        }
        match (&r.answer, &r.error) {
            (Some(QueryAnswer::Belief(b)), _) => {
                print!("    value = {}", b.value);
                if let Some(se) = b.stderr {
                    print!("  stderr = {se:.3e}");
                }
                println!("  (gamma {:.6e}, {:.1} ms)", b.gamma, r.wall_ms);
                if b.diagnostics.low_ess {
                    if let Some(ess) = b.diagnostics.effective_sample_size {
                        println!("    warning: effective sample size only {ess:.0}");
                    }
                }
                for note in &b.diagnostics.notes {
                    println!("    note: {note}");
                }
            }
            (Some(QueryAnswer::Knows { holds, .. }), _) => {
                println!("    knows = {holds}  ({:.1} ms)", r.wall_ms);
            }
            (Some(QueryAnswer::Marginal(h)), _) => print_histogram(h, r),
            (None, Some(e)) => println!("    error: {e}"),
            (None, None) => unreachable!("record without answer or error"),
        }
        if let Some(o) = &r.oracle {
            match (o.value, o.delta, &o.note) {
                (Some(v), Some(d), _) => println!("    oracle {} = {v}  delta = {d:+.3e}", o.method),
                (Some(v), None, _) => println!("    oracle {} = {v}", o.method),
                (_, _, Some(note)) => println!("    oracle: {note}"),
                _ => {}
            }
        }
    }
}

fn print_histogram(h: &Histogram, r: &QueryRecord) {
    println!(
        "    marginal of {} over [{}, {}]  (gamma {:.6e}, {:.1} ms)",
        h.fluent, h.range.0, h.range.1, h.gamma, r.wall_ms
    );
    for atom in &h.atoms {
        println!("    atom  {:<12} mass {:.6}", atom.value, atom.mass);
    }
    for bin in &h.bins {
        println!("    [{:>8.4}, {:>8.4})  mass {:.6}", bin.lo, bin.hi, bin.mass);
    }
    if h.outside_mass > 0.0 {
        println!("    outside range: mass {:.6}", h.outside_mass);
    }
    if let Some(path) = &r.histogram_csv {
        println!("    csv: {path}");
    }
}

fn config_line(cfg: &EngineConfig) -> String {
    format!(
        "backend={} grid={} trunc-sigmas={} samples={} seed={} eps={} atom-threshold={}",
        cfg.backend,
        cfg.quad_points_per_dim,
        cfg.gauss_truncation_sigmas,
        cfg.mc_samples,
        cfg.seed,
        cfg.equality_epsilon,
        cfg.atom_threshold
    )
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Cross-checks a bel answer against whichever reference applies:
/// exhaustive enumeration for all-finite theories, otherwise chained
/// Bayesian conditioning (sensing and deterministic actions only).
fn oracle_check(spec: &TheorySpec, q: &Query, answer: &QueryAnswer) -> OracleCheck {
    let engine = match answer {
        QueryAnswer::Belief(b) => b.value,
        _ => {
            return OracleCheck {
                method: "none",
                value: None,
                delta: None,
                note: Some("oracles cover bel queries only".into()),
            }
        }
    };
    match enumerate_bel(spec, q) {
        Ok(v) => {
            return OracleCheck {
                method: "enumeration",
                value: Some(v),
                delta: Some(engine - v),
                note: None,
            }
        }
        Err(OracleError::InfiniteDomain(_)) => {}
        Err(e) => {
            return OracleCheck { method: "none", value: None, delta: None, note: Some(e.to_string()) }
        }
    }
    match chained_posterior(spec, q, ORACLE_CELLS) {
        Ok(v) => OracleCheck {
            method: "bayes-conditioning",
            value: Some(v),
            delta: Some(engine - v),
            note: None,
        },
        Err(e) => OracleCheck { method: "none", value: None, delta: None, note: Some(e.to_string()) },
    }
}

// ---------------------------------------------------------------------------
// plotdata
// ---------------------------------------------------------------------------

fn plotdata(args: PlotdataArgs) -> i32 {
    let Some((spec, _)) = load_theory(&args.theory) else {
        return 2;
    };
    let query = match parse_query(&args.query, &spec) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("query: {e}");
            return 2;
        }
    };
    if !matches!(query.kind, theory_dsl::ast::QueryKind::Marginal { .. }) {
        eprintln!("plotdata needs a marginal query, e.g. 'marginal h after [] bins=20 range=0,10'");
        return 2;
    }
    let cfg = args.flags.apply(EngineConfig::default().with_overrides(&query.overrides));
    let clean = Query { overrides: Overrides::default(), ..query };
    let hist = match evaluate(&spec, &clean, &cfg) {
        Ok(QueryAnswer::Marginal(h)) => h,
        Ok(_) => unreachable!("marginal query produced a non-marginal answer"),
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match &args.out {
        Some(dir) => {
            if let Err(e) = fs::create_dir_all(dir) {
                eprintln!("{}: {e}", dir.display());
                return 1;
            }
            let path = dir.join(format!("marginal_{}.csv", hist.fluent));
            match write_histogram_csv_file(&hist, &path) {
                Ok(()) => println!("{}", path.display()),
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return 1;
                }
            }
        }
        None => {
            if let Err(e) = write_histogram_csv(&hist, std::io::stdout().lock()) {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    0
}

/// Writes `bin_lo,bin_hi,mass` rows followed by `atom,<value>,<mass>` rows.
pub fn write_histogram_csv<W: std::io::Write>(h: &Histogram, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_lo", "bin_hi", "mass"])?;
    for bin in &h.bins {
        out.write_record([bin.lo.to_string(), bin.hi.to_string(), bin.mass.to_string()])?;
    }
    for atom in &h.atoms {
        out.write_record(["atom".to_string(), atom.value.to_string(), atom.mass.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

fn write_histogram_csv_file(h: &Histogram, path: &Path) -> csv::Result<()> {
    let file = fs::File::create(path)?;
    write_histogram_csv(h, file)
}

// ---------------------------------------------------------------------------
// test-paper
// ---------------------------------------------------------------------------

fn test_paper() -> i32 {
    let start = Instant::now();
    let rows = acceptance::run_all();
    let total = rows.len();
    let mut passed = 0;
    for row in &rows {
        let verdict = if row.pass { "PASS" } else { "FAIL" };
        println!("[{:>2}/{}] {verdict}  {} — {}", row.index, total, row.name, row.detail);
        passed += row.pass as usize;
    }
    println!("{passed}/{total} criteria passed in {:.1} s", start.elapsed().as_secs_f64());
    if passed == total {
        0
    } else {
        1
    }
}
