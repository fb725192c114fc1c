//! Comparison tables, qualitative claim evaluation, full reports and JSON
//! export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envcheck::check_environment;
use crate::journal::{EntryKind, ExplanationStatus, Journal, JournalEntry};
use crate::model::{BenchmarkSpec, ParamPoint};
use crate::runner::{detect_indistinguishable, plausibility_check, CheckOutcome, Measurement, ResultSet};
use crate::stats::{self, NoiseReport, NoiseThresholds, RatioWithUncertainty, Summary, SummaryMode};
use crate::store::{comparison_guard, CheckRecord, SessionRecord};

pub const JSON_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MARGIN: f64 = 0.05;

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    #[default]
    NoticeablyFaster,
}

/// Restricts a claim to points whose `param` lies in `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub param: String,
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub fn contains(&self, point: &ParamPoint) -> bool {
        point
            .get(&self.param)
            .and_then(|v| v.replace('_', "").parse::<f64>().ok())
            .is_some_and(|x| x >= self.low && x <= self.high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualitativeClaim {
    pub claim_id: String,
    pub subject_variant: String,
    pub reference_variant: String,
    pub spec_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_range: Option<ParamRange>,
    #[serde(default)]
    pub kind: ClaimKind,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl QualitativeClaim {
    pub fn noticeably_faster(id: &str, subject: &str, reference: &str, specs: &[&str]) -> Self {
        QualitativeClaim {
            claim_id: id.into(),
            subject_variant: subject.into(),
            reference_variant: reference.into(),
            spec_ids: specs.iter().map(|s| s.to_string()).collect(),
            param_range: None,
            kind: ClaimKind::NoticeablyFaster,
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.subject_variant == self.reference_variant {
            out.push(format!("claim `{}` compares `{}` with itself", self.claim_id, self.subject_variant));
        }
        if self.margin.is_nan() || self.margin < 0.0 {
            out.push(format!("claim `{}` has negative margin {}", self.claim_id, self.margin));
        }
        if self.spec_ids.is_empty() {
            out.push(format!("claim `{}` names no benchmarks", self.claim_id));
        }
        if let Some(r) = &self.param_range {
            if r.low.is_nan() || r.high.is_nan() || r.low > r.high {
                out.push(format!("claim `{}` has an empty range for `{}`", self.claim_id, r.param));
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        let range = match &self.param_range {
            Some(r) => format!(" for {} in [{}, {}]", r.param, r.low, r.high),
            None => String::new(),
        };
        format!(
            "`{}` is noticeably faster than `{}` on {}{} (margin {}%)",
            self.subject_variant,
            self.reference_variant,
            self.spec_ids.join(", "),
            range,
            self.margin * 100.0
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimOutcome {
    Pass,
    Fail,
    Undetermined,
}

impl std::fmt::Display for ClaimOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClaimOutcome::Pass => "PASS",
            ClaimOutcome::Fail => "FAIL",
            ClaimOutcome::Undetermined => "UNDETERMINED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub spec_id: String,
    pub param_point: ParamPoint,
    /// reference / subject, so values above 1 favour the subject.
    pub ratio: RatioWithUncertainty,
    pub outcome: ClaimOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim_id: String,
    pub verdict: ClaimOutcome,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("no results for variant `{variant}` of `{spec_id}`")]
    MissingResults { spec_id: String, variant: String },
    #[error("`{subject}` and `{reference}` of `{spec_id}` were never measured at the same parameter point")]
    NoCommonPoint { spec_id: String, subject: String, reference: String },
    #[error("cannot compare `{spec_id}`: {source}")]
    Stats { spec_id: String, source: stats::StatsError },
}

/// Pass iff `r − σ > 1 + margin`; fail iff `r + σ < 1 + margin`.
pub fn point_verdict(r: &RatioWithUncertainty, margin: f64) -> ClaimOutcome {
    let bar = 1.0 + margin;
    if r.ratio - r.sigma > bar {
        ClaimOutcome::Pass
    } else if r.ratio + r.sigma < bar {
        ClaimOutcome::Fail
    } else {
        ClaimOutcome::Undetermined
    }
}

/// Latest result set per (spec, point, variant), keyed in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Latest<'a> {
    points: Vec<(String, ParamPoint)>,
    sets: BTreeMap<(String, ParamPoint, String), &'a ResultSet>,
}

impl<'a> Latest<'a> {
    pub fn new(results: &'a [ResultSet]) -> Self {
        let mut l = Latest::default();
        for rs in results {
            let key = (rs.spec_id.clone(), rs.param_point.clone());
            if !l.points.contains(&key) {
                l.points.push(key);
            }
            l.sets.insert((rs.spec_id.clone(), rs.param_point.clone(), rs.variant_name.clone()), rs);
        }
        l
    }

    pub fn points_of<'b>(&'b self, spec_id: &'b str) -> impl Iterator<Item = &'b ParamPoint> + 'b {
        self.points.iter().filter(move |(s, _)| s == spec_id).map(|(_, p)| p)
    }

    pub fn get(&self, spec_id: &str, point: &ParamPoint, variant: &str) -> Option<&'a ResultSet> {
        self.sets.get(&(spec_id.to_string(), point.clone(), variant.to_string())).copied()
    }

    pub fn has_variant(&self, spec_id: &str, variant: &str) -> bool {
        self.sets.keys().any(|(s, _, v)| s == spec_id && v == variant)
    }

    /// Result sets at one point: declared variants first, then any others.
    pub fn group(&self, spec: Option<&BenchmarkSpec>, spec_id: &str, point: &ParamPoint) -> Vec<&'a ResultSet> {
        let mut order: Vec<String> = spec.map(|s| s.effective_variants().into_iter().map(|v| v.name).collect()).unwrap_or_default();
        for (s, p, v) in self.sets.keys() {
            if s == spec_id && p == point && !order.contains(v) {
                order.push(v.clone());
            }
        }
        order.iter().filter_map(|v| self.get(spec_id, point, v)).collect()
    }
}

pub fn evaluate_claim(claim: &QualitativeClaim, results: &[ResultSet], mode: SummaryMode) -> Result<ClaimVerdict, ReportError> {
    let latest = Latest::new(results);
    let mut evidence = Vec::new();
    for spec_id in &claim.spec_ids {
        for v in [&claim.subject_variant, &claim.reference_variant] {
            if !latest.has_variant(spec_id, v) {
                return Err(ReportError::MissingResults { spec_id: spec_id.clone(), variant: v.clone() });
            }
        }
        let before = evidence.len();
        for point in latest.points_of(spec_id) {
            if claim.param_range.as_ref().is_some_and(|r| !r.contains(point)) {
                continue;
            }
            let (Some(s), Some(r)) =
                (latest.get(spec_id, point, &claim.subject_variant), latest.get(spec_id, point, &claim.reference_variant))
            else {
                continue;
            };
            let stats_err = |source| ReportError::Stats { spec_id: spec_id.clone(), source };
            let ratio = stats::compare(&r.summary().map_err(stats_err)?, &s.summary().map_err(stats_err)?, mode)
                .map_err(stats_err)?
                .labeled(&claim.reference_variant, &claim.subject_variant);
            let outcome = point_verdict(&ratio, claim.margin);
            evidence.push(Evidence { spec_id: spec_id.clone(), param_point: point.clone(), ratio, outcome });
        }
        if evidence.len() == before {
            return Err(ReportError::NoCommonPoint {
                spec_id: spec_id.clone(),
                subject: claim.subject_variant.clone(),
                reference: claim.reference_variant.clone(),
            });
        }
    }
    let verdict = if evidence.iter().all(|e| e.outcome == ClaimOutcome::Pass) {
        ClaimOutcome::Pass
    } else if evidence.iter().any(|e| e.outcome == ClaimOutcome::Fail) {
        ClaimOutcome::Fail
    } else {
        ClaimOutcome::Undetermined
    };
    Ok(ClaimVerdict { claim_id: claim.claim_id.clone(), verdict, evidence })
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub summary: Summary,
}

/// Index of the fastest row; ties go to the earliest row.
pub fn fastest_index(rows: &[ComparisonRow], mode: SummaryMode) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        if best.is_none_or(|b| r.summary.central(mode) < rows[b].summary.central(mode)) {
            best = Some(i);
        }
    }
    best
}

/// Relative cell text for each row against the fastest.
pub fn relative_cells(rows: &[ComparisonRow], mode: SummaryMode) -> Vec<String> {
    let Some(base) = fastest_index(rows, mode) else { return vec![] };
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if i == base {
                "1.00".to_string()
            } else {
                stats::compare(&r.summary, &rows[base].summary, mode)
                    .map(|x| x.display())
                    .unwrap_or_else(|_| "n/a".into())
            }
        })
        .collect()
}

fn ms(x: f64) -> String {
    format!("{:.1}", x * 1000.0)
}

/// Markdown table with mean ± σ, min and max in milliseconds and the
/// ratio to the fastest row.
pub fn render_comparison(rows: &[ComparisonRow], mode: SummaryMode) -> String {
    let mut out = String::from("| Command | Mean [ms] | Min [ms] | Max [ms] | Relative |\n|:---|---:|---:|---:|---:|\n");
    for (r, rel) in rows.iter().zip(relative_cells(rows, mode)) {
        let s = &r.summary;
        let _ = writeln!(out, "| `{}` | {} ± {} | {} | {} | {} |", r.label, ms(s.mean), ms(s.stddev), ms(s.min), ms(s.max), rel);
    }
    out
}

fn rows_of(sets: &[&ResultSet]) -> Vec<ComparisonRow> {
    sets.iter()
        .filter_map(|rs| Some(ComparisonRow { label: rs.variant_name.clone(), summary: rs.summary().ok()? }))
        .collect()
}

pub fn point_label(point: &ParamPoint) -> String {
    if point.is_empty() {
        return "(no parameters)".into();
    }
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// Everything a report is rendered from.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub specs: &'a [BenchmarkSpec],
    pub claims: &'a [QualitativeClaim],
    pub results: &'a [ResultSet],
    pub sessions: &'a [SessionRecord],
    pub checks: &'a [CheckRecord],
    pub journal: &'a Journal,
    pub mode: SummaryMode,
    pub thresholds: NoiseThresholds,
}

fn spec_order(input: &ReportInput<'_>) -> Vec<String> {
    let mut ids: Vec<String> = input.specs.iter().map(|s| s.id.clone()).collect();
    for rs in input.results {
        if !ids.contains(&rs.spec_id) {
            ids.push(rs.spec_id.clone());
        }
    }
    ids
}

/// Explanations placed under the first spec they link that the report
/// renders; the rest go to `None`.
fn place_explanations<'a>(journal: &'a Journal, specs: &[String]) -> BTreeMap<Option<String>, Vec<&'a JournalEntry>> {
    let mut out: BTreeMap<Option<String>, Vec<&JournalEntry>> = BTreeMap::new();
    for e in journal.explanations() {
        let home = journal.linked_specs(e.entry_id).into_iter().find(|s| specs.contains(s));
        out.entry(home).or_default().push(e);
    }
    out
}

fn render_explanations(out: &mut String, journal: &Journal, entries: &[&JournalEntry], level: &str) {
    let status = |e: &JournalEntry| journal.status_of(e.entry_id).unwrap_or(ExplanationStatus::Proposed);
    let confirmed: Vec<_> = entries.iter().filter(|e| status(e) == ExplanationStatus::Confirmed).collect();
    let refuted: Vec<_> = entries.iter().filter(|e| status(e) == ExplanationStatus::Refuted).collect();
    let conjectures: Vec<_> = entries.iter().filter(|e| status(e).is_conjecture()).collect();
    let last_test = |e: &JournalEntry| journal.tests_of(e.entry_id).filter(|t| t.verdict.is_some()).last().cloned();

    if !confirmed.is_empty() {
        let _ = writeln!(out, "{level} Explanations\n");
        for e in confirmed {
            let test = last_test(e).map(|t| format!(" Confirmed by test #{}: {}", t.entry_id, t.text)).unwrap_or_default();
            let _ = writeln!(out, "- #{}: {}.{}", e.entry_id, e.text.trim_end_matches('.'), test);
        }
        out.push('\n');
    }
    if !conjectures.is_empty() {
        let _ = writeln!(out, "{level} Conjectures\n");
        out.push_str("These explanations have not been validated experimentally.\n\n");
        for e in conjectures {
            let why = if status(e) == ExplanationStatus::Conjecture { " (marked untestable)" } else { "" };
            let _ = writeln!(out, "- #{}: we conjecture that {}{}", e.entry_id, e.text, why);
        }
        out.push('\n');
    }
    if !refuted.is_empty() {
        let _ = writeln!(out, "{level} Refuted explanations\n");
        for e in refuted {
            let revisions = journal.revisions_of(e.entry_id);
            let note = if revisions.is_empty() {
                " **Needs a revised explanation.**".to_string()
            } else {
                format!(" Revised by {}.", revisions.iter().map(|r| format!("#{r}")).collect::<Vec<_>>().join(", "))
            };
            let test = last_test(e).map(|t| format!(" Refuted by test #{}: {}.", t.entry_id, t.text.trim_end_matches('.'))).unwrap_or_default();
            let _ = writeln!(out, "- #{}: ~~{}~~{}{}", e.entry_id, e.text, test, note);
        }
        out.push('\n');
    }
}

fn opt<T: std::fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_else(|| "unknown".into())
}

pub fn render_report(input: &ReportInput<'_>) -> String {
    let latest = Latest::new(input.results);
    let specs = spec_order(input);
    let spec_by_id = |id: &str| input.specs.iter().find(|s| s.id == id);
    let mut out = String::from("# Benchmark report\n\n");

    out.push_str("## Qualitative claims\n\n");
    if input.claims.is_empty() {
        out.push_str("No qualitative claims declared.\n\n");
    }
    for claim in input.claims {
        match evaluate_claim(claim, input.results, input.mode) {
            Ok(v) => {
                let _ = writeln!(out, "- **{}**: {}: **{}**", claim.claim_id, claim.describe(), v.verdict);
                for e in &v.evidence {
                    let _ = writeln!(out, "  - {} at {}: {} ({})", e.spec_id, point_label(&e.param_point), e.ratio.display(), e.outcome);
                }
            }
            Err(err) => {
                let _ = writeln!(out, "- **{}**: {}: **{}** ({err})", claim.claim_id, claim.describe(), ClaimOutcome::Undetermined);
            }
        }
    }
    if !input.claims.is_empty() {
        out.push('\n');
    }

    let placed = place_explanations(input.journal, &specs);
    let mut cross_session = Vec::new();
    let mut plausibility = Vec::new();

    out.push_str("## Benchmarks\n\n");
    if specs.is_empty() {
        out.push_str("No benchmarks defined.\n\n");
    }
    for id in &specs {
        let spec = spec_by_id(id);
        let _ = writeln!(out, "### {id}\n");
        match spec {
            Some(s) => {
                let _ = writeln!(out, "Command: `{}`", s.command_template);
                if !s.tags.is_empty() {
                    let _ = writeln!(out, "Tags: {}", s.tags.join(", "));
                }
                if s.check_template.is_none() {
                    out.push_str("Correctness: no correctness check.\n");
                }
            }
            None => out.push_str("This benchmark is no longer defined in the project file.\n"),
        }
        let checks: BTreeMap<&str, &CheckRecord> =
            input.checks.iter().filter(|c| c.spec_id == *id).map(|c| (c.variant_name.as_str(), c)).collect();
        for (variant, c) in &checks {
            match &c.outcome {
                CheckOutcome::Failed { status, .. } => {
                    let _ = writeln!(out, "Correctness: `{variant}` is **functionally incorrect** (check exited with status {status}).");
                }
                CheckOutcome::Passed => {
                    let _ = writeln!(out, "Correctness: `{variant}` passed its check.");
                }
                CheckOutcome::NotConfigured => {}
            }
        }
        out.push('\n');

        let points: Vec<&ParamPoint> = latest.points_of(id).collect();
        if points.is_empty() {
            out.push_str("No results recorded.\n\n");
        }
        for point in points {
            let group = latest.group(spec, id, point);
            let _ = writeln!(out, "#### {}\n", point_label(point));
            out.push_str(&render_comparison(&rows_of(&group), input.mode));
            out.push('\n');
            for rs in &group {
                if let Ok(n) = rs.noise(&input.thresholds) {
                    let _ = writeln!(out, "- noise `{}`: {}", rs.variant_name, n.describe());
                }
                if let Some(w) = spec.and_then(|s| plausibility_check(rs, s, input.mode)) {
                    plausibility.push(w);
                }
            }
            for (i, a) in group.iter().enumerate() {
                for b in &group[i + 1..] {
                    if let Some(w) = detect_indistinguishable(a, b) {
                        let _ = writeln!(out, "- warning: {w}");
                    }
                    if let Some(w) = comparison_guard(a, b, input.sessions) {
                        cross_session.push(w);
                    }
                }
            }
            out.push('\n');
        }
        if let Some(entries) = placed.get(&Some(id.clone())) {
            render_explanations(&mut out, input.journal, entries, "####");
        }
    }
    if let Some(entries) = placed.get(&None) {
        out.push_str("## General explanations\n\n");
        render_explanations(&mut out, input.journal, entries, "###");
    }

    out.push_str("## Environment and sessions\n\n");
    if input.sessions.is_empty() {
        out.push_str("No sessions recorded.\n\n");
    }
    for s in input.sessions {
        let fp = &s.fingerprint;
        let _ = writeln!(out, "- session `{}` started {} (fingerprint {}, spec hash {})", s.session.session_id, s.session.started_at, fp.fingerprint_id, s.session.spec_hash);
        let _ = writeln!(
            out,
            "  - cpu: {}; os: {}; tool {}; governor {}; fixed frequency {}; turbo {}; AC power {}",
            fp.cpu_model,
            fp.os_descriptor,
            fp.tool_version,
            opt(&fp.governor),
            opt(&fp.frequency_fixed),
            opt(&fp.turbo_enabled),
            opt(&fp.on_ac_power)
        );
        for w in check_environment(fp) {
            let _ = writeln!(out, "  - {}: {w}", if w.is_hard() { "warning" } else { "note" });
        }
    }
    if !input.sessions.is_empty() {
        out.push('\n');
    }
    if !cross_session.is_empty() || !plausibility.is_empty() {
        out.push_str("### Warnings\n\n");
        for w in &cross_session {
            let _ = writeln!(out, "- {w}");
        }
        for w in &plausibility {
            let _ = writeln!(out, "- {w}");
        }
        out.push('\n');
    }

    out.push_str("## Expectations and outcomes\n\n");
    let expectations: Vec<&JournalEntry> = input.journal.entries().iter().filter(|e| e.kind == EntryKind::Expectation).collect();
    if expectations.is_empty() {
        out.push_str("No expectations recorded.\n\n");
    }
    for e in expectations {
        let badge = if e.is_post_hoc() { " **[recorded after results]**" } else { "" };
        let specs_of: Vec<&str> = e.spec_refs().collect();
        let _ = writeln!(out, "- #{} ({}){}: expected {}", e.entry_id, specs_of.join(", "), badge, e.text);
        for spec_id in specs_of {
            let _ = writeln!(out, "  - outcome: {}", outcome_line(&latest, spec_by_id(spec_id), spec_id, input.mode));
        }
    }
    out
}

fn outcome_line(latest: &Latest<'_>, spec: Option<&BenchmarkSpec>, spec_id: &str, mode: SummaryMode) -> String {
    let mut parts = Vec::new();
    for point in latest.points_of(spec_id) {
        let rows = rows_of(&latest.group(spec, spec_id, point));
        let Some(base) = fastest_index(&rows, mode) else { continue };
        let rel: Vec<String> = rows
            .iter()
            .zip(relative_cells(&rows, mode))
            .enumerate()
            .filter(|(i, _)| *i != base)
            .map(|(_, (r, c))| format!("`{}` {}", r.label, c))
            .collect();
        let tail = if rel.is_empty() { String::new() } else { format!(", relative: {}", rel.join(", ")) };
        parts.push(format!("{}: fastest `{}`{}", point_label(point), rows[base].label, tail));
    }
    if parts.is_empty() {
        "no results yet".into()
    } else {
        parts.join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRow {
    pub variant: String,
    pub session_id: String,
    pub summary: Summary,
    /// Ratio to the fastest row; the fastest row has ratio 1 and no sigma.
    pub relative: Option<f64>,
    pub relative_sigma: Option<f64>,
    pub noise: Option<NoiseReport>,
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonComparison {
    pub spec_id: String,
    pub param_point: ParamPoint,
    pub baseline: String,
    pub rows: Vec<JsonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonExport {
    pub schema_version: u32,
    pub mode: SummaryMode,
    pub comparisons: Vec<JsonComparison>,
    pub claims: Vec<ClaimVerdict>,
}

pub fn comparison_json(sets: &[&ResultSet], mode: SummaryMode, thresholds: &NoiseThresholds) -> Option<JsonComparison> {
    let usable: Vec<(&ResultSet, Summary)> = sets.iter().filter_map(|rs| Some((*rs, rs.summary().ok()?))).collect();
    let rows: Vec<ComparisonRow> = usable.iter().map(|(rs, s)| ComparisonRow { label: rs.variant_name.clone(), summary: *s }).collect();
    let base = fastest_index(&rows, mode)?;
    let first = usable.first()?.0;
    let json_rows = usable
        .iter()
        .enumerate()
        .map(|(i, (rs, s))| {
            let (relative, relative_sigma) = if i == base {
                (Some(1.0), None)
            } else {
                match stats::compare(s, &usable[base].1, mode) {
                    Ok(r) => (Some(r.ratio), Some(r.sigma)),
                    Err(_) => (None, None),
                }
            };
            JsonRow {
                variant: rs.variant_name.clone(),
                session_id: rs.session_id.clone(),
                summary: *s,
                relative,
                relative_sigma,
                noise: rs.noise(thresholds).ok(),
                measurements: rs.measurements.clone(),
            }
        })
        .collect();
    Some(JsonComparison {
        spec_id: first.spec_id.clone(),
        param_point: first.param_point.clone(),
        baseline: usable[base].0.variant_name.clone(),
        rows: json_rows,
    })
}

pub fn export_json(input: &ReportInput<'_>) -> JsonExport {
    let latest = Latest::new(input.results);
    let mut comparisons = Vec::new();
    for id in spec_order(input) {
        let spec = input.specs.iter().find(|s| s.id == id);
        for point in latest.points_of(&id) {
            if let Some(c) = comparison_json(&latest.group(spec, &id, point), input.mode, &input.thresholds) {
                comparisons.push(c);
            }
        }
    }
    let claims = input.claims.iter().filter_map(|c| evaluate_claim(c, input.results, input.mode).ok()).collect();
    JsonExport { schema_version: JSON_SCHEMA_VERSION, mode: input.mode, comparisons, claims }
}

pub fn export_json_text(export: &JsonExport) -> String {
    serde_json::to_string_pretty(export).expect("export is always serializable") + "\n"
}

pub fn import_json(text: &str) -> Result<JsonExport, serde_json::Error> {
    serde_json::from_str(text)
}
