//! The project directory: `benchspec.toml` plus the append-only logs.
//!
//! ```toml
//! [settings]
//! mode = "mean"
//! timeout = 60.0
//!
//! [[benchmark]]
//! id = "sort"
//! command_template = "meti-sortbench"
//! env_template = { IMPL = "{impl}", SIZE = "{size}", NITERS = "{niters}" }
//! params = { size = { values = ["10_000"] }, niters = { values = [100] } }
//!
//! [[benchmark.variants]]
//! name = "quicksort"
//! bindings = { impl = "quicksort" }
//!
//! [[claim]]
//! claim_id = "merge-faster"
//! subject_variant = "mergesort"
//! reference_variant = "quicksort"
//! spec_ids = ["sort"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::journal::{Journal, JournalError, JOURNAL_FILE};
use crate::model::{validate_project_specs, BenchmarkSpec, Diagnostic};
use crate::report::QualitativeClaim;
use crate::stats::{NoiseThresholds, SummaryMode};
use crate::store::{Store, StoreError};

pub const PROJECT_FILE: &str = "benchspec.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default)]
    pub mode: SummaryMode,
    #[serde(default)]
    pub noise: NoiseThresholds,
    /// Per-run timeout in seconds.
    #[serde(default)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectFile {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default, rename = "benchmark")]
    pub benchmarks: Vec<BenchmarkSpec>,
    #[serde(default, rename = "claim")]
    pub claims: Vec<QualitativeClaim>,
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("no project file at {0} (run `meti init` to create one)")]
    Missing(PathBuf),
    #[error("invalid project file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Journal(#[from] JournalError),
}

/// Short content hash of the project file, recorded with every session.
pub fn spec_hash(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

#[derive(Debug, Clone)]
pub struct Project {
    pub dir: PathBuf,
    pub file: ProjectFile,
    pub spec_hash: String,
    pub store: Store,
}

impl Project {
    pub fn load(dir: &Path) -> Result<Self, ProjectError> {
        let path = dir.join(PROJECT_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ProjectError::Missing(path)),
            Err(source) => return Err(ProjectError::Io { path, source }),
        };
        let file: ProjectFile = toml::from_str(&text).map_err(|e| ProjectError::Parse { path, message: e.to_string() })?;
        Ok(Project { dir: dir.to_path_buf(), file, spec_hash: spec_hash(&text), store: Store::open(dir) })
    }

    pub fn spec(&self, id: &str) -> Option<&BenchmarkSpec> {
        self.file.benchmarks.iter().find(|s| s.id == id)
    }

    /// Spec and claim problems, as `(subject, message)`.
    pub fn diagnostics(&self) -> Vec<(String, Diagnostic)> {
        validate_project_specs(&self.file.benchmarks)
    }

    pub fn claim_problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.file.claims.iter().flat_map(|c| c.problems()).collect();
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.file.claims {
            if !seen.insert(&c.claim_id) {
                out.push(format!("claim id `{}` is declared twice", c.claim_id));
            }
        }
        out
    }

    pub fn journal_path(&self) -> PathBuf {
        self.dir.join(JOURNAL_FILE)
    }

    pub fn load_journal(&self) -> Result<Journal, ProjectError> {
        Ok(Journal::load(&self.journal_path())?)
    }
}

pub const TEMPLATE: &str = r#"# Benchmark definitions. Placeholders `{name}` are filled from variant
# bindings and parameter values; `{{` and `}}` are literal braces.

[settings]
mode = "mean"

[[benchmark]]
id = "sleep"
command_template = "sleep {duration}"
warmup_count = 1
run_policy = { mode = "fixed", fixed_runs = 10 }
expected_wall_range = [0.01, 1.0]
tags = ["micro"]

[[benchmark.variants]]
name = "short"
bindings = { duration = "0.05" }

[[benchmark.variants]]
name = "long"
bindings = { duration = "0.08" }
"#;

/// Creates the project file (if absent) and empty logs. Returns the files
/// that were created.
pub fn scaffold(dir: &Path) -> Result<Vec<PathBuf>, ProjectError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ProjectError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let store = Store::open(dir);
    let candidates = [dir.join(PROJECT_FILE), store.results_path(), store.sessions_path(), store.checks_path(), dir.join(JOURNAL_FILE)];
    let created: Vec<PathBuf> = candidates.iter().filter(|p| !p.exists()).cloned().collect();
    let project_file = dir.join(PROJECT_FILE);
    if !project_file.exists() {
        fs::write(&project_file, TEMPLATE).map_err(io(&project_file))?;
    }
    store.init()?;
    let journal = dir.join(JOURNAL_FILE);
    fs::OpenOptions::new().create(true).append(true).open(&journal).map_err(io(&journal))?;
    Ok(created)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let created = scaffold(dir.path()).unwrap();
        assert_eq!(created.len(), 5);
        let p = Project::load(dir.path()).unwrap();
        assert!(p.diagnostics().is_empty(), "{:?}", p.diagnostics());
        assert_eq!(p.file.benchmarks[0].effective_variants().len(), 2);
        assert!(scaffold(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Project::load(dir.path()), Err(ProjectError::Missing(_))));
        fs::write(dir.path().join(PROJECT_FILE), "[[benchmark]]\nid = \"x\"\ncommand_template = \"true\"\nbogus = 1\n").unwrap();
        assert!(matches!(Project::load(dir.path()), Err(ProjectError::Parse { .. })));
    }

    #[test]
    fn claims_are_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"
[[benchmark]]
id = "sort"
command_template = "true"

[[claim]]
claim_id = "c"
subject_variant = "mergesort"
reference_variant = "mergesort"
spec_ids = ["sort"]
param_range = { param = "size", low = 1000, high = 100000 }
"#;
        fs::write(dir.path().join(PROJECT_FILE), text).unwrap();
        let p = Project::load(dir.path()).unwrap();
        assert_eq!(p.file.claims[0].margin, 0.05);
        assert_eq!(p.claim_problems().len(), 1);
        assert_eq!(p.spec_hash, spec_hash(text));
    }
}
