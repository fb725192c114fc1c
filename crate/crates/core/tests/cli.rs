use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use meti::store::{ResultFilter, Store};

const METI: &str = env!("CARGO_BIN_EXE_meti");
const SYNTH: &str = env!("CARGO_BIN_EXE_meti-synthetic");

fn meti(dir: &Path, args: &[&str]) -> Output {
    Command::new(METI).arg("--project").arg(dir).args(args).env("NO_COLOR", "1").output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn project(body: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("benchspec.toml"), body).unwrap();
    dir
}

fn two_specs() -> String {
    format!(
        r#"
[[benchmark]]
id = "sort"
command_template = "{SYNTH}"
env_template = {{ BASE_MS = "{{ms}}", MODE = "sleep" }}
run_policy = {{ mode = "fixed", fixed_runs = 3 }}

[[benchmark.variants]]
name = "fast"
bindings = {{ ms = "5" }}

[[benchmark.variants]]
name = "slow"
bindings = {{ ms = "15" }}

[[benchmark]]
id = "other"
command_template = "{SYNTH}"
env_template = {{ BASE_MS = "5" }}
run_policy = {{ mode = "fixed", fixed_runs = 3 }}
"#
    )
}

#[test]
fn run_only_selects_one_spec() {
    let dir = project(&two_specs());
    let out = meti(dir.path(), &["run", "--only", "sort"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let results = Store::open(dir.path()).load_results(&ResultFilter::all()).unwrap().records;
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r.spec_id == "sort"));
    let t = text(&out);
    assert!(t.contains("| Command | Mean [ms] | Min [ms] | Max [ms] | Relative |"));
    assert!(t.contains("reminder: no expectation recorded for `sort`"));
    let noise = t.find("noise `fast`").unwrap();
    assert!(noise < t.find("| Command |").unwrap(), "noise verdicts must precede the table");

    let out = meti(dir.path(), &["run", "--skip", "sort"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let results = Store::open(dir.path()).load_results(&ResultFilter::spec("other")).unwrap().records;
    assert_eq!(results.len(), 1);
}

#[test]
fn usage_errors_exit_2() {
    let dir = project(&two_specs());
    assert_eq!(meti(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(meti(dir.path(), &["run", "--only", "nope"]).status.code(), Some(2));
    assert_eq!(meti(dir.path(), &["sweep", "sort", "--param", "size", "--calibrate"]).status.code(), Some(2));
    let empty = tempfile::tempdir().unwrap();
    let out = meti(empty.path(), &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("meti init"));
}

#[test]
fn bad_spec_blocks_run() {
    let dir = project(&format!(
        r#"
[[benchmark]]
id = "same"
command_template = "{SYNTH}"
[[benchmark.variants]]
name = "a"
[[benchmark.variants]]
name = "b"
"#
    ));
    let out = meti(dir.path(), &["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).contains("identical"), "{}", text(&out));
    assert!(!dir.path().join("results.ndjson").exists());
}

#[test]
fn child_failure_exits_1() {
    let dir = project(&format!(
        r#"
[[benchmark]]
id = "broken"
command_template = "{SYNTH}"
env_template = {{ EXIT_CODE = "3" }}
"#
    ));
    let out = meti(dir.path(), &["run"]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out));
    assert!(text(&out).contains("status 3"));
}

#[test]
fn failed_check_marks_variant_incorrect() {
    let dir = project(&format!(
        r#"
[[benchmark]]
id = "checked"
command_template = "{SYNTH}"
check_template = "{SYNTH}"
env_template = {{ EXIT_CODE = "{{code}}" }}
run_policy = {{ mode = "fixed", fixed_runs = 2 }}
[[benchmark.variants]]
name = "good"
bindings = {{ code = "0" }}
[[benchmark.variants]]
name = "bad"
bindings = {{ code = "4" }}
"#
    ));
    let out = meti(dir.path(), &["run"]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out));
    assert!(text(&out).contains("`bad` is functionally incorrect"));
    let results = Store::open(dir.path()).load_results(&ResultFilter::all()).unwrap().records;
    assert_eq!(results.len(), 1);
    assert_eq!(results[0].variant_name, "good");
    let report = meti(dir.path(), &["report"]);
    assert!(text(&report).contains("functionally incorrect"));
}

#[test]
fn journal_and_report() {
    let dir = project(&two_specs());
    let out = meti(dir.path(), &["journal", "expect", "sort", "fast beats slow"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(!text(&out).contains("post hoc"));
    assert_eq!(meti(dir.path(), &["run", "--only", "sort"]).status.code(), Some(0));
    let out = meti(dir.path(), &["journal", "expect", "sort", "by 3x"]);
    assert!(text(&out).contains("post hoc"));
    assert_eq!(meti(dir.path(), &["journal", "observe", "slow is slower", "--ref", "spec:sort"]).status.code(), Some(0));
    assert_eq!(meti(dir.path(), &["journal", "explain", "it sleeps longer", "--ref", "#3"]).status.code(), Some(0));
    assert_eq!(meti(dir.path(), &["journal", "explain", "x", "--ref", "#99"]).status.code(), Some(2));
    let status = meti(dir.path(), &["journal", "status"]);
    assert!(text(&status).contains("untested (will render as conjecture)"));

    let md = dir.path().join("out.md");
    let json = dir.path().join("out.json");
    let out = meti(dir.path(), &["report", "--export-markdown", md.to_str().unwrap(), "--export-json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = fs::read_to_string(&md).unwrap();
    assert!(doc.contains("Conjectures"));
    assert!(doc.contains("we conjecture that it sleeps longer"));
    assert!(doc.contains("[recorded after results]"));
    let export = meti::report::import_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(export.schema_version, 1);
    assert_eq!(export.comparisons[0].baseline, "fast");

    let test = meti(dir.path(), &["journal", "test", "4", "doubled the sleep", "--verdict", "refuted"]);
    assert!(text(&test).contains("now refuted"), "{}", text(&test));
    let status = meti(dir.path(), &["journal", "status"]);
    assert!(text(&status).contains("refuted, needs a revised explanation"));
}

#[test]
fn compare_and_check_env() {
    let dir = project(&two_specs());
    assert_eq!(meti(dir.path(), &["compare"]).status.code(), Some(2));
    assert_eq!(meti(dir.path(), &["run", "--only", "sort"]).status.code(), Some(0));
    assert_eq!(meti(dir.path(), &["run", "--only", "sort"]).status.code(), Some(0));
    let out = meti(dir.path(), &["compare"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out).contains("`slow`"));
    let env = meti(dir.path(), &["check-env"]);
    assert_eq!(env.status.code(), Some(0));
    assert!(text(&env).contains("fingerprint"));
}

#[test]
fn init_scaffolds() {
    let dir = tempfile::tempdir().unwrap();
    let out = meti(dir.path(), &["init"]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["benchspec.toml", "results.ndjson", "sessions.ndjson", "journal.ndjson"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(meti(dir.path(), &["report"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_plot_files() {
    let dir = project(&format!(
        r#"
[[benchmark]]
id = "lin"
command_template = "{SYNTH}"
env_template = {{ BASE_MS = "{{size}}", MODE = "sleep" }}
params = {{ size = {{ values = [2, 6] }} }}
run_policy = {{ mode = "fixed", fixed_runs = 3 }}
"#
    ));
    let stem = dir.path().join("plot");
    let out = meti(dir.path(), &["sweep", "lin", "--param", "size", "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let data = fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    let (header, rows) = meti::sweep::parse_plot_data(&data).unwrap();
    assert_eq!(header[0], "size");
    assert_eq!(rows.len(), 2);
    assert!(rows[0][1] < rows[1][1]);
    assert!(dir.path().join("plot.gp").exists());
    assert_eq!(Store::open(dir.path()).load_results(&ResultFilter::all()).unwrap().records.len(), 2);
}

#[test]
fn overhead_subcommand() {
    let dir = project(&format!(
        r#"
[[benchmark]]
id = "setup"
command_template = "{SYNTH}"
env_template = {{ SETUP_MS = "30", BASE_MS = "0.5", NITERS = "{{n}}", MODE = "sleep" }}
params = {{ n = {{ values = [1] }} }}
run_policy = {{ mode = "fixed", fixed_runs = 3 }}
"#
    ));
    let out = meti(dir.path(), &["overhead", "setup", "--iter-param", "n", "--n-low", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(text(&out).contains("fixed overhead"));
    assert_eq!(meti(dir.path(), &["overhead", "setup", "--iter-param", "zzz"]).status.code(), Some(2));
}
