//! Child-process execution and measurement.
//!
//! Exactly one measured child is alive at any time. Output is captured
//! rather than inherited; only its last 4 KiB are kept for error messages.

use std::collections::VecDeque;
use std::fmt;
use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{resolve_invocation, BenchmarkSpec, ConcreteInvocation, ParamPoint, ResolveError, RunPolicy, Variant};
use crate::stats::{self, NoiseReport, NoiseThresholds, StatsError, Summary, SummaryMode};

pub const OUTPUT_TAIL_BYTES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub wall_time: f64,
    pub user_time: f64,
    pub system_time: f64,
    pub max_rss: u64,
    pub exit_status: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub spec_id: String,
    pub variant_name: String,
    pub param_point: ParamPoint,
    /// In execution order.
    pub measurements: Vec<Measurement>,
    pub warmups_discarded: u32,
    pub session_id: String,
    pub fingerprint_id: String,
    pub started_at: String,
}

impl ResultSet {
    pub fn wall_times(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.wall_time).collect()
    }

    pub fn system_times(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.system_time).collect()
    }

    pub fn summary(&self) -> Result<Summary, StatsError> {
        stats::summarize(&self.wall_times())
    }

    pub fn noise(&self, thresholds: &NoiseThresholds) -> Result<NoiseReport, StatsError> {
        stats::noise_report_from_series(&self.wall_times(), &self.system_times(), thresholds)
    }

    pub fn total_wall(&self) -> f64 {
        self.measurements.iter().map(|m| m.wall_time).sum()
    }
}

pub fn noise_report(rs: &ResultSet, thresholds: &NoiseThresholds) -> Result<NoiseReport, StatsError> {
    rs.noise(thresholds)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunNote {
    /// The platform does not report this metric; it was recorded as zero.
    MetricUnavailable(String),
}

/// The result of executing one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub measurement: Measurement,
    pub output_tail: String,
    pub notes: Vec<RunNote>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("failed to launch `{program}`: {message}")]
    SpawnFailure { program: String, message: String },
    #[error("`{command}` timed out after {seconds:.1} s and was killed")]
    Timeout { command: String, seconds: f64 },
    #[error("`{command}` exited with status {status}{}", tail_suffix(.output_tail))]
    NonZeroExit { command: String, status: i32, output_tail: String },
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("parameter `{0}` is not declared by the benchmark")]
    UnknownParam(String),
    #[error("measured series is unusable: {0}")]
    Stats(#[from] StatsError),
    #[error("i/o error while running child: {0}")]
    Io(#[from] std::io::Error),
}

fn tail_suffix(tail: &str) -> String {
    if tail.trim().is_empty() {
        String::new()
    } else {
        format!("; output tail:\n{}", tail.trim_end())
    }
}

/// Executes invocations. The process implementation is [`ProcessExecutor`];
/// tests substitute deterministic cost models.
pub trait Executor {
    fn execute(&mut self, inv: &ConcreteInvocation) -> Result<Execution, RunError>;
}

impl<E: Executor + ?Sized> Executor for &mut E {
    fn execute(&mut self, inv: &ConcreteInvocation) -> Result<Execution, RunError> {
        (**self).execute(inv)
    }
}

/// Runs invocations as real child processes.
#[derive(Debug, Clone, Default)]
pub struct ProcessExecutor {
    pub timeout: Option<Duration>,
}

impl ProcessExecutor {
    pub fn new(timeout: Option<Duration>) -> Self {
        ProcessExecutor { timeout }
    }
}

struct TailBuffer(VecDeque<u8>);

impl TailBuffer {
    fn push(&mut self, bytes: &[u8]) {
        self.0.extend(bytes);
        let excess = self.0.len().saturating_sub(OUTPUT_TAIL_BYTES);
        self.0.drain(..excess);
    }
}

fn drain_to_tail<R: Read + Send + 'static>(mut reader: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut tail = TailBuffer(VecDeque::with_capacity(OUTPUT_TAIL_BYTES));
        let mut buf = [0u8; 8192];
        loop {
            match reader.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => tail.push(&buf[..n]),
            }
        }
        tail.0.into_iter().collect()
    })
}

fn combine_tails(stdout: Vec<u8>, stderr: Vec<u8>) -> String {
    let mut text = String::from_utf8_lossy(&stdout).into_owned();
    text.push_str(&String::from_utf8_lossy(&stderr));
    if text.len() > OUTPUT_TAIL_BYTES {
        let mut cut = text.len() - OUTPUT_TAIL_BYTES;
        while !text.is_char_boundary(cut) {
            cut += 1;
        }
        text.drain(..cut);
    }
    text
}

#[cfg(unix)]
mod sys {
    use std::time::Instant;

    pub struct Reaped {
        pub status: i32,
        pub user: f64,
        pub system: f64,
        pub max_rss: u64,
        pub at: Instant,
    }

    fn seconds(tv: libc::timeval) -> f64 {
        tv.tv_sec as f64 + tv.tv_usec as f64 * 1e-6
    }

    /// Blocks in `wait4` until `pid` terminates.
    pub fn wait_child(pid: libc::pid_t) -> std::io::Result<Reaped> {
        let mut status: libc::c_int = 0;
        // SAFETY: rusage is plain data; zeroed is a valid value.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        loop {
            // SAFETY: pointers refer to live locals for the duration of the call.
            let ret = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
            let at = Instant::now();
            if ret == pid {
                let code = if libc::WIFEXITED(status) {
                    libc::WEXITSTATUS(status)
                } else if libc::WIFSIGNALED(status) {
                    128 + libc::WTERMSIG(status)
                } else {
                    -1
                };
                // ru_maxrss is KiB on Linux and bytes on macOS.
                let rss_unit: u64 = if cfg!(target_os = "macos") { 1 } else { 1024 };
                return Ok(Reaped {
                    status: code,
                    user: seconds(usage.ru_utime),
                    system: seconds(usage.ru_stime),
                    max_rss: (usage.ru_maxrss.max(0) as u64) * rss_unit,
                    at,
                });
            }
            let err = std::io::Error::last_os_error();
            if err.kind() != std::io::ErrorKind::Interrupted {
                return Err(err);
            }
        }
    }

    pub fn kill(pid: libc::pid_t) {
        // SAFETY: sending a signal has no memory-safety preconditions.
        unsafe {
            libc::kill(pid, libc::SIGKILL);
        }
    }
}

impl Executor for ProcessExecutor {
    fn execute(&mut self, inv: &ConcreteInvocation) -> Result<Execution, RunError> {
        let program = inv.argv.first().cloned().unwrap_or_default();
        let mut cmd = Command::new(&program);
        cmd.args(&inv.argv[1..])
            .envs(&inv.env)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());

        let start = Instant::now();
        let mut child = cmd
            .spawn()
            .map_err(|e| RunError::SpawnFailure { program: program.clone(), message: e.to_string() })?;
        let out = drain_to_tail(child.stdout.take().expect("piped stdout"));
        let err = drain_to_tail(child.stderr.take().expect("piped stderr"));

        #[cfg(unix)]
        {
            let pid = child.id() as libc::pid_t;
            let reaped = match self.timeout {
                None => sys::wait_child(pid)?,
                Some(limit) => {
                    let (tx, rx) = std::sync::mpsc::channel();
                    thread::spawn(move || {
                        let _ = tx.send(sys::wait_child(pid));
                    });
                    match rx.recv_timeout(limit) {
                        Ok(r) => r?,
                        Err(_) => {
                            sys::kill(pid);
                            let _ = rx.recv();
                            return Err(RunError::Timeout {
                                command: inv.display_command(),
                                seconds: limit.as_secs_f64(),
                            });
                        }
                    }
                }
            };
            let tail = combine_tails(out.join().unwrap_or_default(), err.join().unwrap_or_default());
            let wall = reaped.at.duration_since(start).as_secs_f64();
            Ok(Execution {
                measurement: Measurement {
                    wall_time: wall,
                    user_time: reaped.user,
                    system_time: reaped.system,
                    max_rss: reaped.max_rss,
                    exit_status: reaped.status,
                },
                output_tail: tail,
                notes: vec![],
            })
        }
        #[cfg(not(unix))]
        {
            let status = child.wait()?;
            let wall = start.elapsed().as_secs_f64();
            let tail = combine_tails(out.join().unwrap_or_default(), err.join().unwrap_or_default());
            Ok(Execution {
                measurement: Measurement {
                    wall_time: wall,
                    user_time: 0.0,
                    system_time: 0.0,
                    max_rss: 0,
                    exit_status: status.code().unwrap_or(-1),
                },
                output_tail: tail,
                notes: ["user_time", "system_time", "max_rss"]
                    .iter()
                    .map(|m| RunNote::MetricUnavailable(m.to_string()))
                    .collect(),
            })
        }
    }
}

/// Runs one invocation as a child process.
pub fn run_once(inv: &ConcreteInvocation, timeout: Option<Duration>) -> Result<Measurement, RunError> {
    ProcessExecutor::new(timeout).execute(inv).map(|e| e.measurement)
}

/// Identity stamped onto every result set of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionContext {
    pub session_id: String,
    pub fingerprint_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CheckOutcome {
    Passed,
    Failed { status: i32, output_tail: String },
    NotConfigured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlausibilityKind {
    WronglyFast,
    WronglySlow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityWarning {
    pub kind: PlausibilityKind,
    pub spec_id: String,
    pub variant_name: String,
    pub central: f64,
    pub low: f64,
    pub high: f64,
}

impl fmt::Display for PlausibilityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            PlausibilityKind::WronglyFast => "suspiciously fast",
            PlausibilityKind::WronglySlow => "suspiciously slow",
        };
        write!(
            f,
            "{}/{}: {} ({:.3} s outside the expected range [{}, {}] s); check for skipped work or a wrong build configuration",
            self.spec_id, self.variant_name, what, self.central, self.low, self.high
        )
    }
}

/// Warns when the series' central value is outside the spec's expected range.
pub fn plausibility_check(rs: &ResultSet, spec: &BenchmarkSpec, mode: SummaryMode) -> Option<PlausibilityWarning> {
    let (low, high) = spec.expected_wall_range?;
    let central = rs.summary().ok()?.central(mode);
    let kind = if central < low {
        PlausibilityKind::WronglyFast
    } else if central > high {
        PlausibilityKind::WronglySlow
    } else {
        return None;
    };
    Some(PlausibilityWarning {
        kind,
        spec_id: rs.spec_id.clone(),
        variant_name: rs.variant_name.clone(),
        central,
        low,
        high,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciouslyIdentical {
    pub spec_id: String,
    pub a_variant: String,
    pub b_variant: String,
    pub a_mean: f64,
    pub b_mean: f64,
    pub overlap: f64,
}

impl fmt::Display for SuspiciouslyIdentical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: `{}` and `{}` are suspiciously close ({:.4} s vs {:.4} s, {:.0}% range overlap); \
             make one of them deliberately slower and re-measure to confirm they really run different code",
            self.spec_id,
            self.a_variant,
            self.b_variant,
            self.a_mean,
            self.b_mean,
            self.overlap * 100.0
        )
    }
}

/// Flags two variants whose timings are too close to tell apart.
pub fn detect_indistinguishable(a: &ResultSet, b: &ResultSet) -> Option<SuspiciouslyIdentical> {
    if a.variant_name == b.variant_name {
        return None;
    }
    let (sa, sb) = (a.summary().ok()?, b.summary().ok()?);
    if !stats::indistinguishable(&sa, &sb) {
        return None;
    }
    Some(SuspiciouslyIdentical {
        spec_id: a.spec_id.clone(),
        a_variant: a.variant_name.clone(),
        b_variant: b.variant_name.clone(),
        a_mean: sa.mean,
        b_mean: sb.mean,
        overlap: stats::range_overlap_fraction(&sa, &sb),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadEstimate {
    pub fixed_overhead: f64,
    pub per_iteration: f64,
    pub n_low: u64,
    pub n_high: u64,
    /// Central times measured at `n_low` and `n_high`.
    pub t_low: f64,
    pub t_high: f64,
    /// Set when a negative estimate had to be clamped to zero.
    pub noise_suspected: bool,
}

impl OverheadEstimate {
    /// Overhead estimate `2·t(n) − t(2n)` and slope `(t(2n) − t(n)) / n`.
    pub fn from_times(n_low: u64, t_low: f64, t_high: f64) -> Self {
        let raw_fixed = 2.0 * t_low - t_high;
        let raw_per = (t_high - t_low) / n_low as f64;
        OverheadEstimate {
            fixed_overhead: raw_fixed.max(0.0),
            per_iteration: raw_per.max(0.0),
            n_low,
            n_high: 2 * n_low,
            t_low,
            t_high,
            noise_suspected: raw_fixed < 0.0 || raw_per < 0.0,
        }
    }

    /// Overhead as a fraction of a run at `n_low` iterations.
    pub fn overhead_fraction(&self) -> f64 {
        if self.t_low > 0.0 {
            self.fixed_overhead / self.t_low
        } else {
            0.0
        }
    }
}

/// Drives an [`Executor`] through warmups, run policies and checks.
pub struct Runner<E> {
    pub executor: E,
    pub session: SessionContext,
}

fn now_stamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl<E: Executor> Runner<E> {
    pub fn new(executor: E, session: SessionContext) -> Self {
        Runner { executor, session }
    }

    fn measure(&mut self, inv: &ConcreteInvocation) -> Result<Measurement, RunError> {
        let exec = self.executor.execute(inv)?;
        if exec.measurement.exit_status != 0 {
            return Err(RunError::NonZeroExit {
                command: inv.display_command(),
                status: exec.measurement.exit_status,
                output_tail: exec.output_tail,
            });
        }
        Ok(exec.measurement)
    }

    pub fn run_series(&mut self, spec: &BenchmarkSpec, variant: &Variant, point: &ParamPoint) -> Result<ResultSet, RunError> {
        let mut sets = self.run_interleaved(spec, std::slice::from_ref(variant), point, &spec.run_policy)?;
        Ok(sets.remove(0))
    }

    /// Runs all variants at one point, alternating between them run by run.
    pub fn run_interleaved(
        &mut self,
        spec: &BenchmarkSpec,
        variants: &[Variant],
        point: &ParamPoint,
        policy: &RunPolicy,
    ) -> Result<Vec<ResultSet>, RunError> {
        let invocations = variants
            .iter()
            .map(|v| resolve_invocation(spec, v, point))
            .collect::<Result<Vec<_>, _>>()?;
        let started_at = now_stamp();

        for _ in 0..spec.warmup_count {
            for inv in &invocations {
                self.measure(inv)?;
            }
        }

        let mut series: Vec<Vec<Measurement>> = vec![Vec::new(); invocations.len()];
        let mut elapsed = vec![0.0f64; invocations.len()];
        loop {
            let mut progressed = false;
            for (i, inv) in invocations.iter().enumerate() {
                if policy.wants_more(series[i].len() as u32, elapsed[i]) {
                    let m = self.measure(inv)?;
                    elapsed[i] += m.wall_time;
                    series[i].push(m);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }

        Ok(variants
            .iter()
            .zip(series)
            .map(|(v, measurements)| ResultSet {
                spec_id: spec.id.clone(),
                variant_name: v.name.clone(),
                param_point: point.clone(),
                measurements,
                warmups_discarded: spec.warmup_count,
                session_id: self.session.session_id.clone(),
                fingerprint_id: self.session.fingerprint_id.clone(),
                started_at: started_at.clone(),
            })
            .collect())
    }

    /// Runs the resolved check command once; passes iff it exits 0.
    pub fn check_correctness(&mut self, spec: &BenchmarkSpec, variant: &Variant, point: &ParamPoint) -> Result<CheckOutcome, RunError> {
        let Some(inv) = spec.resolve_check(variant, point) else {
            return Ok(CheckOutcome::NotConfigured);
        };
        let exec = self.executor.execute(&inv?)?;
        Ok(match exec.measurement.exit_status {
            0 => CheckOutcome::Passed,
            status => CheckOutcome::Failed { status, output_tail: exec.output_tail },
        })
    }

    /// Central wall time of a full series at the given point.
    pub fn central_time(&mut self, spec: &BenchmarkSpec, variant: &Variant, point: &ParamPoint, mode: SummaryMode) -> Result<f64, RunError> {
        Ok(self.run_series(spec, variant, point)?.summary()?.central(mode))
    }

    /// Separates fixed startup cost from per-iteration cost by measuring at
    /// `n_low` and `2·n_low` iterations. `iter_param` must scale the work
    /// linearly; that is the caller's responsibility.
    pub fn estimate_overhead(
        &mut self,
        spec: &BenchmarkSpec,
        variant: &Variant,
        point: &ParamPoint,
        iter_param: &str,
        n_low: u64,
        mode: SummaryMode,
    ) -> Result<OverheadEstimate, RunError> {
        if !spec.params.contains_key(iter_param) {
            return Err(RunError::UnknownParam(iter_param.to_string()));
        }
        let at = |n: u64, runner: &mut Self| {
            let mut p = point.clone();
            p.insert(iter_param.to_string(), n.to_string());
            runner.central_time(spec, variant, &p, mode)
        };
        let t_low = at(n_low, self)?;
        let t_high = at(2 * n_low, self)?;
        Ok(OverheadEstimate::from_times(n_low, t_low, t_high))
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Deterministic executor: wall time = fixed + per_iter × `iter_env`,
    /// read from the invocation's environment. Records every call.
    pub struct CostModel {
        pub fixed: f64,
        pub per_iter: f64,
        pub iter_env: String,
        pub exit_status: i32,
        pub calls: Vec<ConcreteInvocation>,
    }

    impl CostModel {
        pub fn new(fixed: f64, per_iter: f64, iter_env: &str) -> Self {
            CostModel { fixed, per_iter, iter_env: iter_env.into(), exit_status: 0, calls: Vec::new() }
        }
    }

    impl Executor for CostModel {
        fn execute(&mut self, inv: &ConcreteInvocation) -> Result<Execution, RunError> {
            self.calls.push(inv.clone());
            let n: f64 = inv.env.get(&self.iter_env).and_then(|s| s.parse().ok()).unwrap_or(1.0);
            let wall = self.fixed + self.per_iter * n;
            Ok(Execution {
                measurement: Measurement {
                    wall_time: wall,
                    user_time: wall,
                    system_time: 0.0,
                    max_rss: 0,
                    exit_status: self.exit_status,
                },
                output_tail: "model output".into(),
                notes: vec![],
            })
        }
    }

    pub fn session() -> SessionContext {
        SessionContext { session_id: "s1".into(), fingerprint_id: "f1".into() }
    }

    pub fn linear_spec() -> BenchmarkSpec {
        let mut spec = BenchmarkSpec::new("lin", "work");
        spec.env_template.insert("NITERS".into(), "{niters}".into());
        spec.params.insert("niters".into(), crate::model::ValueDomain::Values(vec!["100".into()]));
        spec
    }
}
