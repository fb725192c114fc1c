//! Append-only METI journal: expectations, observations, explanations,
//! tests and improvements.
//!
//! Entries are never rewritten. An explanation's status is derived from the
//! test entries that link it:
//!
//! | latest decisive verdict | status      |
//! |-------------------------|-------------|
//! | none                    | proposed    |
//! | confirmed               | confirmed   |
//! | refuted                 | refuted     |
//! | untestable              | conjecture  |
//!
//! `inconclusive` tests are recorded but never change the status. A
//! revision is a later explanation that references the earlier one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ndjson::{self, SkippedLine};
use crate::store::{ResultFilter, Store};

pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Expectation,
    Observation,
    Explanation,
    Test,
    Improvement,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Expectation => "expectation",
            EntryKind::Observation => "observation",
            EntryKind::Explanation => "explanation",
            EntryKind::Test => "test",
            EntryKind::Improvement => "improvement",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ref {
    Spec(String),
    Session(String),
    Entry(u64),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Spec(s) => write!(f, "spec:{s}"),
            Ref::Session(s) => write!(f, "session:{s}"),
            Ref::Entry(id) => write!(f, "#{id}"),
        }
    }
}

impl std::str::FromStr for Ref {
    type Err = String;

    /// Parses `spec:ID`, `session:ID`, `#N` or a bare entry number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("spec:") {
            return Ok(Ref::Spec(rest.to_string()));
        }
        if let Some(rest) = s.strip_prefix("session:") {
            return Ok(Ref::Session(rest.to_string()));
        }
        let digits = s.strip_prefix('#').or_else(|| s.strip_prefix("entry:")).unwrap_or(s);
        digits
            .parse()
            .map(Ref::Entry)
            .map_err(|_| format!("`{s}` is not a reference (expected spec:ID, session:ID or #N)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    Refuted,
    Inconclusive,
    /// The explanation cannot be tested; it stays a conjecture.
    Untestable,
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "confirmed" => Ok(Verdict::Confirmed),
            "refuted" => Ok(Verdict::Refuted),
            "inconclusive" => Ok(Verdict::Inconclusive),
            "untestable" => Ok(Verdict::Untestable),
            _ => Err(format!("unknown verdict `{s}` (expected confirmed, refuted, inconclusive or untestable)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationStatus {
    Proposed,
    Confirmed,
    Refuted,
    Conjecture,
}

impl ExplanationStatus {
    /// Whether the report must present the explanation as a conjecture.
    pub fn is_conjecture(self) -> bool {
        matches!(self, ExplanationStatus::Proposed | ExplanationStatus::Conjecture)
    }
}

impl fmt::Display for ExplanationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExplanationStatus::Proposed => "proposed",
            ExplanationStatus::Confirmed => "confirmed",
            ExplanationStatus::Refuted => "refuted",
            ExplanationStatus::Conjecture => "conjecture",
        })
    }
}

/// Status implied by test verdicts in file order.
pub fn derive_status<I: IntoIterator<Item = Verdict>>(verdicts: I) -> ExplanationStatus {
    verdicts.into_iter().fold(ExplanationStatus::Proposed, |status, v| match v {
        Verdict::Confirmed => ExplanationStatus::Confirmed,
        Verdict::Refuted => ExplanationStatus::Refuted,
        Verdict::Untestable => ExplanationStatus::Conjecture,
        Verdict::Inconclusive => status,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub format_version: u32,
    pub entry_id: u64,
    pub kind: EntryKind,
    pub text: String,
    pub refs: Vec<Ref>,
    pub created_at: String,
    /// Expectations only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_hoc: Option<bool>,
    /// Tests only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl JournalEntry {
    pub fn entry_refs(&self) -> impl Iterator<Item = u64> + '_ {
        self.refs.iter().filter_map(|r| match r {
            Ref::Entry(id) => Some(*id),
            _ => None,
        })
    }

    pub fn spec_refs(&self) -> impl Iterator<Item = &str> + '_ {
        self.refs.iter().filter_map(|r| match r {
            Ref::Spec(s) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn is_post_hoc(&self) -> bool {
        self.post_hoc == Some(true)
    }
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("reference {0} does not resolve to an existing entry or result session")]
    DanglingRef(Ref),
    #[error("reference {reference} points to a {found} entry; {expected}")]
    WrongRefKind { reference: Ref, found: EntryKind, expected: &'static str },
    #[error("entry #{0} is not an explanation")]
    UnknownExplanation(u64),
    #[error("journal i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// What the journal needs to know about stored results.
pub trait ResultsIndex {
    fn has_results(&self, spec_id: &str) -> bool;
    fn has_session(&self, session_id: &str) -> bool;
}

impl ResultsIndex for Store {
    fn has_results(&self, spec_id: &str) -> bool {
        Store::has_results(self, spec_id)
    }

    fn has_session(&self, session_id: &str) -> bool {
        self.load_results(&ResultFilter::session(session_id)).is_ok_and(|l| !l.records.is_empty())
            || self.load_sessions().is_ok_and(|l| l.records.iter().any(|s| s.session.session_id == session_id))
    }
}

/// A fixed set of known specs and sessions.
#[derive(Debug, Clone, Default)]
pub struct KnownResults {
    pub specs: BTreeSet<String>,
    pub sessions: BTreeSet<String>,
}

impl ResultsIndex for KnownResults {
    fn has_results(&self, spec_id: &str) -> bool {
        self.specs.contains(spec_id)
    }

    fn has_session(&self, session_id: &str) -> bool {
        self.sessions.contains(session_id)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Journal {
    path: Option<PathBuf>,
    entries: Vec<JournalEntry>,
    skipped: Vec<SkippedLine>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Journal {
    pub fn in_memory() -> Self {
        Journal::default()
    }

    /// Loads the journal at `path`; a missing file is an empty journal.
    pub fn load(path: &Path) -> Result<Self, JournalError> {
        let io = |source| JournalError::Io { path: path.to_path_buf(), source };
        let (entries, skipped) = if path.exists() { ndjson::read(path).map_err(io)? } else { (vec![], vec![]) };
        Ok(Journal { path: Some(path.to_path_buf()), entries, skipped })
    }

    pub fn from_entries(entries: Vec<JournalEntry>) -> Self {
        Journal { path: None, entries, skipped: vec![] }
    }

    pub fn entries(&self) -> &[JournalEntry] {
        &self.entries
    }

    pub fn skipped(&self) -> &[SkippedLine] {
        &self.skipped
    }

    pub fn get(&self, id: u64) -> Option<&JournalEntry> {
        self.entries.iter().find(|e| e.entry_id == id)
    }

    fn next_id(&self) -> u64 {
        self.entries.iter().map(|e| e.entry_id).max().unwrap_or(0) + 1
    }

    fn append(
        &mut self,
        kind: EntryKind,
        text: &str,
        refs: Vec<Ref>,
        post_hoc: Option<bool>,
        verdict: Option<Verdict>,
    ) -> Result<JournalEntry, JournalError> {
        let entry = JournalEntry {
            format_version: FORMAT_VERSION,
            entry_id: self.next_id(),
            kind,
            text: text.to_string(),
            refs,
            created_at: now(),
            post_hoc,
            verdict,
        };
        if let Some(p) = &self.path {
            ndjson::append(p, std::slice::from_ref(&entry)).map_err(|source| JournalError::Io { path: p.clone(), source })?;
        }
        self.entries.push(entry.clone());
        Ok(entry)
    }

    fn check_ref(&self, r: &Ref, results: &dyn ResultsIndex) -> Result<Option<EntryKind>, JournalError> {
        match r {
            Ref::Entry(id) => self.get(*id).map(|e| Some(e.kind)).ok_or_else(|| JournalError::DanglingRef(r.clone())),
            Ref::Session(s) if !results.has_session(s) => Err(JournalError::DanglingRef(r.clone())),
            _ => Ok(None),
        }
    }

    /// Records an expectation; it is post-hoc iff results already exist.
    pub fn record_expectation(&mut self, spec_id: &str, text: &str, results: &dyn ResultsIndex) -> Result<JournalEntry, JournalError> {
        let post_hoc = results.has_results(spec_id);
        self.append(EntryKind::Expectation, text, vec![Ref::Spec(spec_id.to_string())], Some(post_hoc), None)
    }

    pub fn record_observation(&mut self, text: &str, refs: Vec<Ref>, results: &dyn ResultsIndex) -> Result<JournalEntry, JournalError> {
        for r in &refs {
            self.check_ref(r, results)?;
        }
        self.append(EntryKind::Observation, text, refs, None, None)
    }

    /// Entry refs must name observations, or earlier explanations being revised.
    pub fn record_explanation(&mut self, text: &str, refs: Vec<Ref>, results: &dyn ResultsIndex) -> Result<JournalEntry, JournalError> {
        for r in &refs {
            if let Some(kind) = self.check_ref(r, results)? {
                if !matches!(kind, EntryKind::Observation | EntryKind::Explanation) {
                    return Err(JournalError::WrongRefKind {
                        reference: r.clone(),
                        found: kind,
                        expected: "explanations may only reference observations or the explanation they revise",
                    });
                }
            }
        }
        self.append(EntryKind::Explanation, text, refs, None, None)
    }

    pub fn attach_test(&mut self, explanation_id: u64, text: &str, verdict: Verdict) -> Result<JournalEntry, JournalError> {
        match self.get(explanation_id) {
            Some(e) if e.kind == EntryKind::Explanation => {}
            _ => return Err(JournalError::UnknownExplanation(explanation_id)),
        }
        self.append(EntryKind::Test, text, vec![Ref::Entry(explanation_id)], None, Some(verdict))
    }

    pub fn record_improvement(&mut self, text: &str, refs: Vec<Ref>, results: &dyn ResultsIndex) -> Result<JournalEntry, JournalError> {
        for r in &refs {
            self.check_ref(r, results)?;
        }
        self.append(EntryKind::Improvement, text, refs, None, None)
    }

    pub fn explanations(&self) -> impl Iterator<Item = &JournalEntry> + '_ {
        self.entries.iter().filter(|e| e.kind == EntryKind::Explanation)
    }

    pub fn tests_of(&self, explanation_id: u64) -> impl Iterator<Item = &JournalEntry> + '_ {
        self.entries
            .iter()
            .filter(move |e| e.kind == EntryKind::Test && e.entry_refs().any(|r| r == explanation_id))
    }

    pub fn status_of(&self, explanation_id: u64) -> Option<ExplanationStatus> {
        let e = self.get(explanation_id)?;
        if e.kind != EntryKind::Explanation {
            return None;
        }
        Some(derive_status(self.tests_of(explanation_id).filter_map(|t| t.verdict)))
    }

    pub fn statuses(&self) -> BTreeMap<u64, ExplanationStatus> {
        self.explanations().filter_map(|e| Some((e.entry_id, self.status_of(e.entry_id)?))).collect()
    }

    /// Later explanations that reference `explanation_id`.
    pub fn revisions_of(&self, explanation_id: u64) -> Vec<u64> {
        self.explanations()
            .filter(|e| e.entry_id != explanation_id && e.entry_refs().any(|r| r == explanation_id))
            .map(|e| e.entry_id)
            .collect()
    }

    pub fn expectations_for<'a>(&'a self, spec_id: &'a str) -> impl Iterator<Item = &'a JournalEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| e.kind == EntryKind::Expectation && e.spec_refs().any(|s| s == spec_id))
    }

    /// Specs an entry relates to, following entry links transitively.
    pub fn linked_specs(&self, entry_id: u64) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![entry_id];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let Some(e) = self.get(id) else { continue };
            for r in &e.refs {
                match r {
                    Ref::Spec(s) if !out.contains(s) => out.push(s.clone()),
                    Ref::Entry(next) => stack.push(*next),
                    _ => {}
                }
            }
        }
        out
    }
}

/// Outstanding work before the analysis is complete.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusReport {
    pub untested: Vec<u64>,
    pub refuted_without_revision: Vec<u64>,
    pub missing_expectation: Vec<String>,
    pub post_hoc_expectations: Vec<u64>,
}

impl StatusReport {
    pub fn is_empty(&self) -> bool {
        self.untested.is_empty()
            && self.refuted_without_revision.is_empty()
            && self.missing_expectation.is_empty()
            && self.post_hoc_expectations.is_empty()
    }

    pub fn render(&self, journal: &Journal) -> String {
        if self.is_empty() {
            return "journal is complete: every explanation is tested and every expectation was pre-registered\n".into();
        }
        let mut out = String::new();
        let text = |id: u64| journal.get(id).map(|e| e.text.as_str()).unwrap_or("");
        let mut section = |title: &str, lines: Vec<String>| {
            if !lines.is_empty() {
                out.push_str(title);
                out.push('\n');
                for l in lines {
                    out.push_str("  ");
                    out.push_str(&l);
                    out.push('\n');
                }
            }
        };
        section(
            "untested (will render as conjecture):",
            self.untested.iter().map(|id| format!("#{id} {}", text(*id))).collect(),
        );
        section(
            "refuted, needs a revised explanation:",
            self.refuted_without_revision.iter().map(|id| format!("#{id} {}", text(*id))).collect(),
        );
        section("no pre-registered expectation:", self.missing_expectation.clone());
        section(
            "recorded after results (post hoc):",
            self.post_hoc_expectations.iter().map(|id| format!("#{id} {}", text(*id))).collect(),
        );
        out
    }
}

/// `specs_with_results` are the spec ids that have stored results.
pub fn journal_status(journal: &Journal, specs_with_results: &[String]) -> StatusReport {
    let statuses = journal.statuses();
    let untested = statuses.iter().filter(|(_, s)| **s == ExplanationStatus::Proposed).map(|(id, _)| *id).collect();
    let refuted_without_revision = statuses
        .iter()
        .filter(|(id, s)| **s == ExplanationStatus::Refuted && journal.revisions_of(**id).is_empty())
        .map(|(id, _)| *id)
        .collect();
    let mut missing_expectation: Vec<String> = specs_with_results
        .iter()
        .filter(|s| journal.expectations_for(s).next().is_none())
        .cloned()
        .collect();
    missing_expectation.dedup();
    let post_hoc_expectations = journal
        .entries()
        .iter()
        .filter(|e| e.kind == EntryKind::Expectation && e.is_post_hoc())
        .map(|e| e.entry_id)
        .collect();
    StatusReport { untested, refuted_without_revision, missing_expectation, post_hoc_expectations }
}
