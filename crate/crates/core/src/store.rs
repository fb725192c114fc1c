//! Versioned, append-only persistence of sessions, result sets and
//! correctness-check outcomes.
//!
//! All files live in the project directory so they can be committed next to
//! the benchmark definitions:
//!
//! - `sessions.ndjson`: one [`SessionRecord`] per measuring session,
//!   including the full environment fingerprint.
//! - `results.ndjson`: one [`ResultRecord`] per (spec, variant, point) series.
//! - `checks.ndjson`: one [`CheckRecord`] per correctness check run.
//!
//! Every record carries `format_version`.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envcheck::{diff_fingerprints, EnvironmentFingerprint, FieldMismatch};
use crate::model::ParamPoint;
use crate::ndjson::{self, SkippedLine};
use crate::runner::{CheckOutcome, ResultSet};

pub const FORMAT_VERSION: u32 = 1;
pub const RESULTS_FILE: &str = "results.ndjson";
pub const SESSIONS_FILE: &str = "sessions.ndjson";
pub const CHECKS_FILE: &str = "checks.ndjson";
pub const LOCK_FILE: &str = ".meti.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("results file {0} does not exist (run `meti init` or `meti run` first)")]
    MissingFile(PathBuf),
    #[error("another process holds the project lock {0}")]
    Locked(PathBuf),
    #[error("result set belongs to session {found}, not the open session {expected}")]
    SessionMismatch { expected: String, found: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub fingerprint_id: String,
    pub spec_hash: String,
    pub started_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub format_version: u32,
    #[serde(flatten)]
    pub session: Session,
    pub fingerprint: EnvironmentFingerprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub format_version: u32,
    #[serde(flatten)]
    pub result: ResultSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub format_version: u32,
    pub session_id: String,
    pub spec_id: String,
    pub variant_name: String,
    pub param_point: ParamPoint,
    pub outcome: CheckOutcome,
}

/// Records that matched, plus lines that failed to decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultFilter {
    pub spec_id: Option<String>,
    pub variant_name: Option<String>,
    pub session_id: Option<String>,
}

impl ResultFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn spec<S: Into<String>>(id: S) -> Self {
        ResultFilter { spec_id: Some(id.into()), ..Self::default() }
    }

    pub fn session<S: Into<String>>(id: S) -> Self {
        ResultFilter { session_id: Some(id.into()), ..Self::default() }
    }

    pub fn matches(&self, rs: &ResultSet) -> bool {
        self.spec_id.as_ref().is_none_or(|s| *s == rs.spec_id)
            && self.variant_name.as_ref().is_none_or(|v| *v == rs.variant_name)
            && self.session_id.as_ref().is_none_or(|s| *s == rs.session_id)
    }
}

/// Exclusive writer lock on a project directory, released on drop.
#[derive(Debug)]
pub struct StoreLock {
    _file: File,
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

pub fn new_session_id() -> String {
    format!("{}-{:06x}", chrono::Utc::now().format("%Y%m%dT%H%M%SZ"), rand::random::<u32>() & 0xff_ffff)
}

impl Store {
    pub fn open<P: Into<PathBuf>>(dir: P) -> Self {
        Store { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn results_path(&self) -> PathBuf {
        self.dir.join(RESULTS_FILE)
    }

    pub fn sessions_path(&self) -> PathBuf {
        self.dir.join(SESSIONS_FILE)
    }

    pub fn checks_path(&self) -> PathBuf {
        self.dir.join(CHECKS_FILE)
    }

    /// Creates empty log files where missing.
    pub fn init(&self) -> Result<(), StoreError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        for p in [self.results_path(), self.sessions_path(), self.checks_path()] {
            OpenOptions::new().create(true).append(true).open(&p).map_err(io_err(&p))?;
        }
        Ok(())
    }

    pub fn lock(&self) -> Result<StoreLock, StoreError> {
        let path = self.dir.join(LOCK_FILE);
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io_err(&path))?;
        #[cfg(unix)]
        {
            use std::os::unix::io::AsRawFd;
            // SAFETY: the descriptor stays open for the lifetime of `file`.
            let ret = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX | libc::LOCK_NB) };
            if ret != 0 {
                let err = io::Error::last_os_error();
                return Err(if err.kind() == io::ErrorKind::WouldBlock {
                    StoreError::Locked(path)
                } else {
                    StoreError::Io { path, source: err }
                });
            }
        }
        Ok(StoreLock { _file: file })
    }

    /// Opens a session and records it, with its fingerprint, in the sessions log.
    pub fn open_session(&self, fingerprint: &EnvironmentFingerprint, spec_hash: &str) -> Result<Session, StoreError> {
        let session = Session {
            session_id: new_session_id(),
            fingerprint_id: fingerprint.fingerprint_id.clone(),
            spec_hash: spec_hash.to_string(),
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        self.record_session(&session, fingerprint)?;
        Ok(session)
    }

    pub fn record_session(&self, session: &Session, fingerprint: &EnvironmentFingerprint) -> Result<(), StoreError> {
        let rec = SessionRecord { format_version: FORMAT_VERSION, session: session.clone(), fingerprint: fingerprint.clone() };
        let p = self.sessions_path();
        ndjson::append(&p, &[rec]).map_err(io_err(&p))
    }

    pub fn append_results(&self, session: &Session, sets: &[ResultSet]) -> Result<(), StoreError> {
        if let Some(bad) = sets.iter().find(|s| s.session_id != session.session_id) {
            return Err(StoreError::SessionMismatch {
                expected: session.session_id.clone(),
                found: bad.session_id.clone(),
            });
        }
        let records: Vec<ResultRecord> =
            sets.iter().map(|r| ResultRecord { format_version: FORMAT_VERSION, result: r.clone() }).collect();
        let p = self.results_path();
        ndjson::append(&p, &records).map_err(io_err(&p))
    }

    pub fn append_check(&self, record: CheckRecord) -> Result<(), StoreError> {
        let p = self.checks_path();
        ndjson::append(&p, &[record]).map_err(io_err(&p))
    }

    /// Matching result sets in append order.
    pub fn load_results(&self, filter: &ResultFilter) -> Result<Loaded<ResultSet>, StoreError> {
        let p = self.results_path();
        if !p.exists() {
            return Err(StoreError::MissingFile(p));
        }
        let (records, skipped) = ndjson::read::<ResultRecord>(&p).map_err(io_err(&p))?;
        Ok(Loaded {
            records: records.into_iter().map(|r| r.result).filter(|r| filter.matches(r)).collect(),
            skipped,
        })
    }

    /// Sessions in append order; a missing log is empty.
    pub fn load_sessions(&self) -> Result<Loaded<SessionRecord>, StoreError> {
        load_optional(&self.sessions_path())
    }

    pub fn load_checks(&self) -> Result<Loaded<CheckRecord>, StoreError> {
        load_optional(&self.checks_path())
    }

    pub fn has_results(&self, spec_id: &str) -> bool {
        self.load_results(&ResultFilter::spec(spec_id)).is_ok_and(|l| !l.records.is_empty())
    }
}

fn load_optional<T: serde::de::DeserializeOwned>(p: &Path) -> Result<Loaded<T>, StoreError> {
    if !p.exists() {
        return Ok(Loaded { records: vec![], skipped: vec![] });
    }
    let (records, skipped) = ndjson::read(p).map_err(io_err(p))?;
    Ok(Loaded { records, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSessionWarning {
    pub spec_id: String,
    pub a_variant: String,
    pub b_variant: String,
    pub a_session: String,
    pub b_session: String,
    pub mismatches: Vec<FieldMismatch>,
    pub spec_hash_changed: bool,
    /// A session has no record in the sessions log, so nothing can be verified.
    pub unverifiable: bool,
}

impl CrossSessionWarning {
    pub fn is_escalated(&self) -> bool {
        !self.mismatches.is_empty() || self.spec_hash_changed || self.unverifiable
    }

    pub fn fields(&self) -> Vec<String> {
        let mut f: Vec<String> = self.mismatches.iter().map(|m| m.field.clone()).collect();
        if self.spec_hash_changed {
            f.push("spec_hash".into());
        }
        f
    }
}

impl fmt::Display for CrossSessionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: `{}` (session {}) and `{}` (session {}) were measured in different sessions",
            self.spec_id, self.a_variant, self.a_session, self.b_variant, self.b_session
        )?;
        if !self.is_escalated() {
            return write!(f, "; cross-session comparisons are more exposed to environmental bias");
        }
        let mut reasons: Vec<String> = self.mismatches.iter().map(ToString::to_string).collect();
        if self.spec_hash_changed {
            reasons.push("the benchmark definitions changed in between (spec_hash differs)".into());
        }
        if self.unverifiable {
            reasons.push("a session record is missing, so the environment cannot be compared".into());
        }
        write!(f, "; ESCALATED, the sessions differ: {}", reasons.join("; "))
    }
}

/// Warns when two result sets come from different sessions, escalating when
/// their fingerprints or benchmark definitions differ.
pub fn comparison_guard(a: &ResultSet, b: &ResultSet, sessions: &[SessionRecord]) -> Option<CrossSessionWarning> {
    if a.session_id == b.session_id {
        return None;
    }
    let find = |id: &str| sessions.iter().find(|s| s.session.session_id == id);
    let (sa, sb) = (find(&a.session_id), find(&b.session_id));
    let (mismatches, spec_hash_changed, unverifiable) = match (sa, sb) {
        (Some(x), Some(y)) => (diff_fingerprints(&x.fingerprint, &y.fingerprint), x.session.spec_hash != y.session.spec_hash, false),
        _ => (vec![], false, true),
    };
    Some(CrossSessionWarning {
        spec_id: a.spec_id.clone(),
        a_variant: a.variant_name.clone(),
        b_variant: b.variant_name.clone(),
        a_session: a.session_id.clone(),
        b_session: b.session_id.clone(),
        mismatches,
        spec_hash_changed,
        unverifiable,
    })
}
