//! The `meti` command line.
//!
//! Exit status: 0 on success (warnings included), 1 when a benchmark or
//! check fails, 2 for usage and configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::envcheck::{capture_fingerprint, check_environment, EnvironmentFingerprint};
use crate::journal::{journal_status, Journal, Ref, Verdict};
use crate::model::{BenchmarkSpec, Diagnostic, ParamPoint, Variant};
use crate::project::{scaffold, Project};
use crate::report::{
    evaluate_claim, export_json, export_json_text, point_label, relative_cells, render_comparison, render_report, fastest_index,
    ComparisonRow, Latest, ReportInput,
};
use crate::runner::{detect_indistinguishable, plausibility_check, CheckOutcome, ProcessExecutor, ResultSet, Runner, SessionContext};
use crate::stats::{NoiseThresholds, SummaryMode};
use crate::store::{comparison_guard, CheckRecord, Loaded, ResultFilter, SessionRecord, StoreError, FORMAT_VERSION};
use crate::sweep::{default_point, emit_plot_data, run_sweep, SweepOptions, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "meti", version, about = "Process benchmark harness with noise diagnostics and an experiment journal")]
struct Cli {
    /// Project directory holding benchspec.toml and the result logs.
    #[arg(long, global = true, default_value = ".")]
    project: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create benchspec.toml and empty logs.
    Init,
    /// Measure the enabled benchmarks and store the results.
    Run(RunArgs),
    /// Measure a benchmark across the values of one parameter.
    Sweep(SweepArgs),
    /// Re-render comparisons from stored results.
    Compare(CompareArgs),
    /// Record and inspect journal entries.
    #[command(subcommand)]
    Journal(JournalCommand),
    /// Render the full report.
    Report(ReportArgs),
    /// Show the machine state relevant to timing stability.
    CheckEnv,
    /// Estimate fixed startup overhead from runs at n and 2n iterations.
    Overhead(OverheadArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run only these benchmarks (also runs disabled ones).
    #[arg(long, value_name = "ID")]
    only: Vec<String>,
    /// Skip these benchmarks.
    #[arg(long, value_name = "ID")]
    skip: Vec<String>,
    /// Central value used for ratios: mean or min.
    #[arg(long)]
    mode: Option<SummaryMode>,
    /// Fix a parameter to one value, as NAME=VALUE.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    spec: String,
    /// Parameter to sweep over its declared domain.
    #[arg(long)]
    param: String,
    /// Calibrate the iteration parameter at every point.
    #[arg(long, requires = "iter_param")]
    calibrate: bool,
    /// Parameter that scales the work linearly.
    #[arg(long)]
    iter_param: Option<String>,
    /// Restrict to these variants.
    #[arg(long = "variant", value_name = "NAME")]
    variants: Vec<String>,
    /// Fix another parameter, as NAME=VALUE.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
    /// Output path stem for the plot data and script.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Limit to these benchmarks.
    #[arg(long = "spec", value_name = "ID")]
    specs: Vec<String>,
    /// Central value used for ratios: mean or min.
    #[arg(long)]
    mode: Option<SummaryMode>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Also write the Markdown report to a file.
    #[arg(long, value_name = "PATH")]
    export_markdown: Option<PathBuf>,
    /// Also write the comparisons and claim verdicts as JSON.
    #[arg(long, value_name = "PATH")]
    export_json: Option<PathBuf>,
    /// Central value used for ratios: mean or min.
    #[arg(long)]
    mode: Option<SummaryMode>,
}

#[derive(Debug, Args)]
struct OverheadArgs {
    spec: String,
    /// Parameter that scales the work linearly.
    #[arg(long)]
    iter_param: String,
    /// The lower iteration count n.
    #[arg(long, default_value_t = 100)]
    n_low: u64,
    #[arg(long)]
    variant: Option<String>,
    /// Fix another parameter, as NAME=VALUE.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
    /// Central value used for ratios: mean or min.
    #[arg(long)]
    mode: Option<SummaryMode>,
}

#[derive(Debug, Subcommand)]
enum JournalCommand {
    /// Pre-register what you expect a benchmark to show.
    Expect { spec: String, text: String },
    /// Note what the measurements show.
    Observe {
        text: String,
        /// spec:ID, session:ID or #N.
        #[arg(long = "ref", value_name = "REF")]
        refs: Vec<Ref>,
    },
    /// Propose a cause; reference an earlier explanation to revise it.
    Explain {
        text: String,
        #[arg(long = "ref", value_name = "REF")]
        refs: Vec<Ref>,
    },
    /// Record a test of an explanation.
    Test {
        explanation: u64,
        text: String,
        #[arg(long)]
        verdict: Verdict,
    },
    /// Record a change made in response to the analysis.
    Improve {
        text: String,
        #[arg(long = "ref", value_name = "REF")]
        refs: Vec<Ref>,
    },
    /// List what still needs testing, revising or pre-registering.
    Status,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("`{s}` is not NAME=VALUE"))
}

enum Failure {
    Usage(String),
    Child(String),
}

type CmdResult = Result<i32, Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Style { color: !no_color && std::io::stdout().is_terminal() }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn warn(&self, text: &str) -> String {
        format!("{} {text}", self.paint("33;1", "warning:"))
    }

    fn error(&self, text: &str) -> String {
        format!("{} {text}", self.paint("31;1", "error:"))
    }
}

pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let style = Style::detect();
    let dir = cli.project.as_path();
    let result = match cli.command {
        Command::Init => cmd_init(dir),
        Command::Run(a) => cmd_run(dir, a, &style),
        Command::Sweep(a) => cmd_sweep(dir, a, &style),
        Command::Compare(a) => cmd_compare(dir, a, &style),
        Command::Journal(j) => cmd_journal(dir, j),
        Command::Report(a) => cmd_report(dir, a),
        Command::CheckEnv => cmd_check_env(&style),
        Command::Overhead(a) => cmd_overhead(dir, a, &style),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", style.error(&msg));
            2
        }
        Err(Failure::Child(msg)) => {
            eprintln!("{}", style.error(&msg));
            1
        }
    }
}

fn cmd_init(dir: &Path) -> CmdResult {
    let created = scaffold(dir).map_err(usage)?;
    if created.is_empty() {
        println!("project already initialized in {}", dir.display());
    }
    for p in created {
        println!("created {}", p.display());
    }
    Ok(0)
}

fn load_project(dir: &Path) -> Result<Project, Failure> {
    Project::load(dir).map_err(usage)
}

fn timeout(project: &Project) -> Option<Duration> {
    project.file.settings.timeout.filter(|t| *t > 0.0).map(Duration::from_secs_f64)
}

fn select_specs(project: &Project, only: &[String], skip: &[String]) -> Result<Vec<BenchmarkSpec>, Failure> {
    for id in only.iter().chain(skip) {
        if project.spec(id).is_none() {
            return Err(Failure::Usage(format!("no benchmark named `{id}` in the project file")));
        }
    }
    Ok(project
        .file
        .benchmarks
        .iter()
        .filter(|s| if only.is_empty() { s.enabled } else { only.contains(&s.id) })
        .filter(|s| !skip.contains(&s.id))
        .cloned()
        .collect())
}

fn check_diagnostics(project: &Project, ids: &[&str]) -> Result<(), Failure> {
    let diags: Vec<(String, Diagnostic)> =
        project.diagnostics().into_iter().filter(|(id, _)| ids.contains(&id.as_str()) || id.is_empty()).collect();
    if diags.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = diags.iter().map(|(id, d)| format!("  {id}: {d}")).collect();
    Err(Failure::Usage(format!("the project file has problems; nothing was run:\n{}", lines.join("\n"))))
}

fn points_for(spec: &BenchmarkSpec, set: &[(String, String)]) -> Vec<ParamPoint> {
    let mut points: Vec<ParamPoint> = Vec::new();
    for mut p in spec.param_points() {
        for (k, v) in set {
            if spec.params.contains_key(k) {
                p.insert(k.clone(), v.clone());
            }
        }
        if !points.contains(&p) {
            points.push(p);
        }
    }
    points
}

fn print_env_warnings(fp: &EnvironmentFingerprint, style: &Style) {
    for w in check_environment(fp) {
        if w.is_hard() {
            eprintln!("{}", style.warn(&w.to_string()));
        } else {
            eprintln!("note: {w}");
        }
    }
}

/// Noise verdicts, then warnings, then the table and ratio summary.
fn print_group(sets: &[&ResultSet], spec: Option<&BenchmarkSpec>, mode: SummaryMode, t: &NoiseThresholds, sessions: &[SessionRecord], style: &Style) {
    for rs in sets {
        if let Ok(n) = rs.noise(t) {
            let line = format!("noise `{}`: {}", rs.variant_name, n.describe());
            if n.has_warnings() {
                println!("{}", style.warn(&line));
            } else {
                println!("{line}");
            }
        }
        if let Some(w) = spec.and_then(|s| plausibility_check(rs, s, mode)) {
            println!("{}", style.warn(&w.to_string()));
        }
    }
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(w) = detect_indistinguishable(a, b) {
                println!("{}", style.warn(&w.to_string()));
            }
            if let Some(w) = comparison_guard(a, b, sessions) {
                println!("{}", style.warn(&w.to_string()));
            }
        }
    }
    let rows: Vec<ComparisonRow> =
        sets.iter().filter_map(|rs| Some(ComparisonRow { label: rs.variant_name.clone(), summary: rs.summary().ok()? })).collect();
    println!();
    print!("{}", render_comparison(&rows, mode));
    if let Some(base) = fastest_index(&rows, mode) {
        if rows.len() > 1 {
            println!("\n`{}` ran", rows[base].label);
            for (i, (r, cell)) in rows.iter().zip(relative_cells(&rows, mode)).enumerate() {
                if i != base {
                    println!("  {cell} times faster than `{}`", r.label);
                }
            }
        }
    }
    println!();
}

fn load_sessions(project: &Project) -> Vec<SessionRecord> {
    project.store.load_sessions().map(|l| l.records).unwrap_or_default()
}

fn report_skipped<T>(loaded: &Loaded<T>, what: &str, style: &Style) {
    for s in &loaded.skipped {
        eprintln!("{}", style.warn(&format!("skipped unreadable {what} record on line {}: {}", s.line, s.error)));
    }
}

fn cmd_run(dir: &Path, args: RunArgs, style: &Style) -> CmdResult {
    let project = load_project(dir)?;
    let specs = select_specs(&project, &args.only, &args.skip)?;
    if specs.is_empty() {
        println!("no benchmarks selected");
        return Ok(0);
    }
    let ids: Vec<&str> = specs.iter().map(|s| s.id.as_str()).collect();
    check_diagnostics(&project, &ids)?;
    for p in project.claim_problems() {
        eprintln!("{}", style.warn(&p));
    }
    let mode = args.mode.unwrap_or(project.file.settings.mode);
    let thresholds = project.file.settings.noise;

    let journal = project.load_journal().map_err(usage)?;
    for id in &ids {
        if journal.expectations_for(id).next().is_none() {
            eprintln!("reminder: no expectation recorded for `{id}`; write one down with `meti journal expect {id} \"...\"` before reading the results");
        }
    }

    let _lock = project.store.lock().map_err(usage)?;
    let fp = capture_fingerprint();
    print_env_warnings(&fp, style);
    let session = project.store.open_session(&fp, &project.spec_hash).map_err(usage)?;
    let mut runner = Runner::new(
        ProcessExecutor::new(timeout(&project)),
        SessionContext { session_id: session.session_id.clone(), fingerprint_id: fp.fingerprint_id.clone() },
    );
    println!("session {}", session.session_id);
    let sessions = load_sessions(&project);

    let mut failures = 0;
    for spec in &specs {
        for point in points_for(spec, &args.set) {
            println!("\n== {} [{}] ==", spec.id, point_label(&point));
            let mut ok: Vec<Variant> = Vec::new();
            for v in spec.effective_variants() {
                match runner.check_correctness(spec, &v, &point) {
                    Ok(CheckOutcome::NotConfigured) => ok.push(v),
                    Ok(outcome) => {
                        if let CheckOutcome::Failed { status, output_tail } = &outcome {
                            failures += 1;
                            eprintln!(
                                "{}",
                                style.error(&format!("`{}` is functionally incorrect: check exited with status {status}\n{}", v.name, output_tail.trim_end()))
                            );
                        } else {
                            ok.push(v.clone());
                        }
                        let rec = CheckRecord {
                            format_version: FORMAT_VERSION,
                            session_id: session.session_id.clone(),
                            spec_id: spec.id.clone(),
                            variant_name: v.name.clone(),
                            param_point: point.clone(),
                            outcome,
                        };
                        project.store.append_check(rec).map_err(usage)?;
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!("{}", style.error(&format!("check of `{}` failed to run: {e}", v.name)));
                    }
                }
            }
            if ok.is_empty() {
                continue;
            }
            match runner.run_interleaved(spec, &ok, &point, &spec.run_policy) {
                Ok(sets) => {
                    project.store.append_results(&session, &sets).map_err(usage)?;
                    let refs: Vec<&ResultSet> = sets.iter().collect();
                    print_group(&refs, Some(spec), mode, &thresholds, &sessions, style);
                }
                Err(e) => {
                    failures += 1;
                    eprintln!("{}", style.error(&format!("{}: {e}", spec.id)));
                }
            }
        }
    }

    print_claims(&project, &ids, mode, style);
    Ok(if failures > 0 { 1 } else { 0 })
}

fn print_claims(project: &Project, ids: &[&str], mode: SummaryMode, style: &Style) {
    let claims: Vec<_> = project.file.claims.iter().filter(|c| c.spec_ids.iter().any(|s| ids.contains(&s.as_str()))).collect();
    if claims.is_empty() {
        return;
    }
    let results = project.store.load_results(&ResultFilter::all()).map(|l| l.records).unwrap_or_default();
    println!("claims:");
    for c in claims {
        match evaluate_claim(c, &results, mode) {
            Ok(v) => {
                println!("  {}: {} ({})", c.claim_id, v.verdict, c.describe());
                for e in &v.evidence {
                    println!("    {} at {}: {} ({})", e.spec_id, point_label(&e.param_point), e.ratio.display(), e.outcome);
                }
            }
            Err(e) => println!("  {}: {}", c.claim_id, style.warn(&format!("UNDETERMINED ({e})"))),
        }
    }
}

fn cmd_compare(dir: &Path, args: CompareArgs, style: &Style) -> CmdResult {
    let project = load_project(dir)?;
    for id in &args.specs {
        if project.spec(id).is_none() {
            return Err(Failure::Usage(format!("no benchmark named `{id}` in the project file")));
        }
    }
    let mode = args.mode.unwrap_or(project.file.settings.mode);
    let loaded = project.store.load_results(&ResultFilter::all()).map_err(usage)?;
    report_skipped(&loaded, "result", style);
    let sessions = load_sessions(&project);
    let latest = Latest::new(&loaded.records);
    let mut ids: Vec<String> = project.file.benchmarks.iter().map(|s| s.id.clone()).collect();
    for rs in &loaded.records {
        if !ids.contains(&rs.spec_id) {
            ids.push(rs.spec_id.clone());
        }
    }
    let mut any = false;
    for id in ids.iter().filter(|id| args.specs.is_empty() || args.specs.contains(id)) {
        let spec = project.spec(id);
        for point in latest.points_of(id) {
            any = true;
            println!("== {id} [{}] ==", point_label(point));
            print_group(&latest.group(spec, id, point), spec, mode, &project.file.settings.noise, &sessions, style);
        }
    }
    if !any {
        println!("no stored results to compare");
    }
    Ok(0)
}

fn cmd_sweep(dir: &Path, args: SweepArgs, style: &Style) -> CmdResult {
    let project = load_project(dir)?;
    let spec = project.spec(&args.spec).ok_or_else(|| Failure::Usage(format!("no benchmark named `{}`", args.spec)))?.clone();
    check_diagnostics(&project, &[spec.id.as_str()])?;
    let sweep = SweepSpec::from_benchmark(&spec, &args.param).map_err(usage)?;
    let mut variants = spec.effective_variants();
    if !args.variants.is_empty() {
        for v in &args.variants {
            if spec.variant(v).is_none() {
                return Err(Failure::Usage(format!("`{}` has no variant `{v}`", spec.id)));
            }
        }
        variants.retain(|v| args.variants.contains(&v.name));
    }
    let opts = SweepOptions {
        base_point: default_point(&spec, &args.set.iter().cloned().collect()),
        calibrate: if args.calibrate { args.iter_param.clone() } else { None },
        thresholds: project.file.settings.noise,
    };
    if let Some(p) = &opts.calibrate {
        if !spec.params.contains_key(p) {
            return Err(Failure::Usage(format!("`{}` declares no parameter `{p}`", spec.id)));
        }
    }

    let _lock = project.store.lock().map_err(usage)?;
    let fp = capture_fingerprint();
    print_env_warnings(&fp, style);
    let session = project.store.open_session(&fp, &project.spec_hash).map_err(usage)?;
    let mut runner = Runner::new(
        ProcessExecutor::new(timeout(&project)),
        SessionContext { session_id: session.session_id.clone(), fingerprint_id: fp.fingerprint_id.clone() },
    );
    let run = run_sweep(&mut runner, &spec, &sweep, &variants, &opts).map_err(usage)?;
    project.store.append_results(&session, &run.result_sets).map_err(usage)?;

    let mode = project.file.settings.mode;
    for p in &run.result.points {
        let iters = p.iterations.map(|n| format!(" ({n} iterations)")).unwrap_or_default();
        println!("== {} = {}{} ==", run.result.swept_param, p.text, iters);
        for vp in &p.results {
            let line = format!("noise `{}`: {}", vp.variant, vp.noise.describe());
            println!("{}", if vp.noise.has_warnings() { style.warn(&line) } else { line });
        }
        let rows: Vec<ComparisonRow> = p.results.iter().map(|vp| ComparisonRow { label: vp.variant.clone(), summary: vp.summary }).collect();
        println!();
        println!("{}", render_comparison(&rows, mode));
    }
    if !run.result.points.is_empty() {
        let stem = args.out.unwrap_or_else(|| project.dir.join("plots").join(format!("{}-{}", spec.id, args.param)));
        let files = emit_plot_data(&run.result, &stem).map_err(usage)?;
        println!("plot data: {}\nplot script: {} (renders {})", files.data.display(), files.script.display(), files.image.display());
    }
    match run.error {
        None => Ok(0),
        Some(e) => Err(Failure::Child(format!("sweep stopped early after {} point(s); partial results were kept: {e}", run.result.points.len()))),
    }
}

fn cmd_overhead(dir: &Path, args: OverheadArgs, style: &Style) -> CmdResult {
    let project = load_project(dir)?;
    let spec = project.spec(&args.spec).ok_or_else(|| Failure::Usage(format!("no benchmark named `{}`", args.spec)))?.clone();
    check_diagnostics(&project, &[spec.id.as_str()])?;
    if args.n_low == 0 {
        return Err(Failure::Usage("--n-low must be positive".into()));
    }
    let variant = match &args.variant {
        Some(v) => spec.variant(v).ok_or_else(|| Failure::Usage(format!("`{}` has no variant `{v}`", spec.id)))?,
        None => spec.effective_variants().remove(0),
    };
    let point = default_point(&spec, &args.set.iter().cloned().collect());
    let fp = capture_fingerprint();
    print_env_warnings(&fp, style);
    let mut runner = Runner::new(
        ProcessExecutor::new(timeout(&project)),
        SessionContext { session_id: "overhead".into(), fingerprint_id: fp.fingerprint_id.clone() },
    );
    let mode = args.mode.unwrap_or(project.file.settings.mode);
    let est = runner
        .estimate_overhead(&spec, &variant, &point, &args.iter_param, args.n_low, mode)
        .map_err(|e| match e {
            crate::runner::RunError::UnknownParam(_) => usage(e),
            other => Failure::Child(other.to_string()),
        })?;
    println!(
        "t({}) = {:.1} ms, t({}) = {:.1} ms\nfixed overhead = {:.1} ms ({:.1}% of a run at {} iterations)\nper iteration = {:.4} ms",
        est.n_low,
        est.t_low * 1e3,
        est.n_high,
        est.t_high * 1e3,
        est.fixed_overhead * 1e3,
        est.overhead_fraction() * 100.0,
        est.n_low,
        est.per_iteration * 1e3
    );
    if est.noise_suspected {
        println!("{}", style.warn("a negative estimate was clamped to zero; the measurements are too noisy to separate overhead"));
    }
    Ok(0)
}

fn cmd_journal(dir: &Path, cmd: JournalCommand) -> CmdResult {
    let project = load_project(dir)?;
    let mut journal = project.load_journal().map_err(usage)?;
    if let JournalCommand::Status = cmd {
        let results = project.store.load_results(&ResultFilter::all()).map(|l| l.records).unwrap_or_default();
        let mut specs: Vec<String> = Vec::new();
        for rs in &results {
            if !specs.contains(&rs.spec_id) {
                specs.push(rs.spec_id.clone());
            }
        }
        print!("{}", journal_status(&journal, &specs).render(&journal));
        return Ok(0);
    }
    let _lock = project.store.lock().map_err(usage)?;
    let store = &project.store;
    let entry = match cmd {
        JournalCommand::Expect { spec, text } => {
            if project.spec(&spec).is_none() {
                return Err(Failure::Usage(format!("no benchmark named `{spec}` in the project file")));
            }
            journal.record_expectation(&spec, &text, store)
        }
        JournalCommand::Observe { text, refs } => journal.record_observation(&text, refs, store),
        JournalCommand::Explain { text, refs } => journal.record_explanation(&text, refs, store),
        JournalCommand::Test { explanation, text, verdict } => journal.attach_test(explanation, &text, verdict),
        JournalCommand::Improve { text, refs } => journal.record_improvement(&text, refs, store),
        JournalCommand::Status => unreachable!("handled above"),
    }
    .map_err(usage)?;
    let note = if entry.is_post_hoc() { " (post hoc: results for this benchmark already exist)" } else { "" };
    println!("recorded {} #{}{}", entry.kind, entry.entry_id, note);
    if let Some(id) = entry.entry_refs().next().filter(|_| entry.verdict.is_some()) {
        if let Some(status) = journal.status_of(id) {
            println!("explanation #{id} is now {status}");
        }
    }
    Ok(0)
}

fn load_or_empty<T>(r: Result<Loaded<T>, StoreError>) -> Result<Vec<T>, Failure> {
    match r {
        Ok(l) => Ok(l.records),
        Err(StoreError::MissingFile(_)) => Ok(vec![]),
        Err(e) => Err(usage(e)),
    }
}

fn cmd_report(dir: &Path, args: ReportArgs) -> CmdResult {
    let project = load_project(dir)?;
    let results = load_or_empty(project.store.load_results(&ResultFilter::all()))?;
    let sessions = load_or_empty(project.store.load_sessions())?;
    let checks = load_or_empty(project.store.load_checks())?;
    let journal: Journal = project.load_journal().map_err(usage)?;
    let input = ReportInput {
        specs: &project.file.benchmarks,
        claims: &project.file.claims,
        results: &results,
        sessions: &sessions,
        checks: &checks,
        journal: &journal,
        mode: args.mode.unwrap_or(project.file.settings.mode),
        thresholds: project.file.settings.noise,
    };
    let doc = render_report(&input);
    print!("{doc}");
    if let Some(p) = &args.export_markdown {
        fs::write(p, &doc).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    if let Some(p) = &args.export_json {
        fs::write(p, export_json_text(&export_json(&input))).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(0)
}

fn cmd_check_env(style: &Style) -> CmdResult {
    let fp = capture_fingerprint();
    let show = |x: Option<bool>| x.map(|b| b.to_string()).unwrap_or_else(|| "unknown".into());
    println!("fingerprint     {}", fp.fingerprint_id);
    println!("cpu             {}", fp.cpu_model);
    println!("governor        {}", fp.governor.clone().unwrap_or_else(|| "unknown".into()));
    println!("fixed frequency {}", show(fp.frequency_fixed));
    println!("turbo/boost     {}", show(fp.turbo_enabled));
    println!("on AC power     {}", show(fp.on_ac_power));
    println!("os              {}", fp.os_descriptor);
    println!("tool            {}", fp.tool_version);
    let warnings = check_environment(&fp);
    if warnings.is_empty() {
        println!("no warnings");
    }
    for w in warnings {
        if w.is_hard() {
            println!("{}", style.warn(&w.to_string()));
        } else {
            println!("note: {w}");
        }
    }
    Ok(0)
}
