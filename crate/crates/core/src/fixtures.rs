//! Workload programs used as ground truth by the integration and
//! acceptance tests.
//!
//! Both are configured through environment variables and exit with status
//! 2 and a message naming the variable when one is missing or invalid.
//!
//! The synthetic workload costs
//! `SETUP_MS + NITERS × BASE_MS × (1 + DRIFT_PCT/100)^k × outlier` ms on
//! its `k`-th invocation, where `k` is counted in `STATE_FILE`.
//!
//! The sort workload sorts a random list of `SIZE` integers with a list
//! quicksort or mergesort `NITERS` times, checking the first result against
//! the standard library sort.

use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};
use std::{fmt, fs, thread};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvError {
    pub message: String,
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn missing(var: &str) -> EnvError {
    EnvError { message: format!("environment variable {var:?} is missing") }
}

fn incorrect(var: &str, value: &str, descr: &str) -> EnvError {
    EnvError { message: format!("environment variable {var:?} has incorrect value {value:?}; expected {descr}") }
}

struct Env<F>(F);

impl<F: Fn(&str) -> Option<String>> Env<F> {
    fn required<T>(&self, var: &str, descr: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, EnvError> {
        let raw = (self.0)(var).ok_or_else(|| missing(var))?;
        parse(&raw).ok_or_else(|| incorrect(var, &raw, descr))
    }

    fn optional<T>(&self, var: &str, descr: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, EnvError> {
        match (self.0)(var) {
            None => Ok(default),
            Some(raw) => parse(&raw).ok_or_else(|| incorrect(var, &raw, descr)),
        }
    }
}

/// Integers may contain `_` separators, as in `10_000`.
fn parse_int<T: std::str::FromStr>(s: &str) -> Option<T> {
    let cleaned: String = s.trim().chars().filter(|c| *c != '_').collect();
    cleaned.parse().ok()
}

fn parse_nonneg(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0)
}

fn process_env(var: &str) -> Option<String> {
    std::env::var(var).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkMode {
    /// Busy loop, so the cost shows up as user time.
    Spin,
    Sleep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub base_ms: f64,
    pub niters: u64,
    pub setup_ms: f64,
    pub drift_pct: f64,
    pub state_file: Option<PathBuf>,
    pub outlier_p: f64,
    pub outlier_mult: f64,
    pub seed: u64,
    pub exit_code: i32,
    pub mode: WorkMode,
}

impl SyntheticConfig {
    pub fn from_lookup<F: Fn(&str) -> Option<String>>(lookup: F) -> Result<Self, EnvError> {
        let env = Env(lookup);
        let number = "a non-negative number";
        let cfg = SyntheticConfig {
            base_ms: env.optional("BASE_MS", number, 0.0, parse_nonneg)?,
            niters: env.optional("NITERS", "a non-negative integer", 1, parse_int)?,
            setup_ms: env.optional("SETUP_MS", number, 0.0, parse_nonneg)?,
            drift_pct: env.optional("DRIFT_PCT", "a number greater than -100", 0.0, |s| {
                s.trim().parse::<f64>().ok().filter(|x| x.is_finite() && *x > -100.0)
            })?,
            state_file: (env.0)("STATE_FILE").filter(|s| !s.is_empty()).map(PathBuf::from),
            outlier_p: env.optional("OUTLIER_P", "a probability in [0, 1]", 0.0, |s| {
                parse_nonneg(s).filter(|p| *p <= 1.0)
            })?,
            outlier_mult: env.optional("OUTLIER_MULT", "a positive number", 1.0, |s| parse_nonneg(s).filter(|m| *m > 0.0))?,
            seed: env.optional("SEED", "a non-negative integer", 0, parse_int)?,
            exit_code: env.optional("EXIT_CODE", "an integer in [0, 255]", 0, |s| parse_int::<i32>(s).filter(|c| (0..=255).contains(c)))?,
            mode: env.optional("MODE", "[spin | sleep]", WorkMode::Spin, |s| match s {
                "spin" => Some(WorkMode::Spin),
                "sleep" => Some(WorkMode::Sleep),
                _ => None,
            })?,
        };
        if cfg.drift_pct != 0.0 && cfg.state_file.is_none() {
            return Err(EnvError { message: "environment variable \"DRIFT_PCT\" requires \"STATE_FILE\" to count invocations".into() });
        }
        Ok(cfg)
    }

    /// Cost of the `invocation`-th run (0-based), in seconds.
    pub fn planned_cost(&self, invocation: u64) -> f64 {
        let drift = (1.0 + self.drift_pct / 100.0).powf(invocation as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ invocation);
        let outlier = if self.outlier_p > 0.0 && rng.gen::<f64>() < self.outlier_p { self.outlier_mult } else { 1.0 };
        (self.setup_ms + self.niters as f64 * self.base_ms * drift * outlier) / 1000.0
    }
}

/// Reads and increments the invocation counter; 0 without a state file.
pub fn next_invocation(state_file: Option<&PathBuf>) -> std::io::Result<u64> {
    let Some(path) = state_file else { return Ok(0) };
    let current = match fs::read_to_string(path) {
        Ok(s) => s.trim().parse().unwrap_or(0),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
        Err(e) => return Err(e),
    };
    fs::write(path, format!("{}\n", current + 1))?;
    Ok(current)
}

/// Consumes `seconds` of wall time.
pub fn burn(seconds: f64, mode: WorkMode) {
    if seconds <= 0.0 {
        return;
    }
    let d = Duration::from_secs_f64(seconds);
    match mode {
        WorkMode::Sleep => thread::sleep(d),
        WorkMode::Spin => {
            let start = Instant::now();
            let mut x: u64 = 1;
            while start.elapsed() < d {
                for _ in 0..1000 {
                    x = black_box(x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407));
                }
            }
            black_box(x);
        }
    }
}

/// Entry point of the synthetic workload; returns the exit status.
pub fn synthetic_main() -> i32 {
    let cfg = match SyntheticConfig::from_lookup(process_env) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let k = match next_invocation(cfg.state_file.as_ref()) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("cannot update STATE_FILE: {e}");
            return 2;
        }
    };
    burn(cfg.planned_cost(k), cfg.mode);
    cfg.exit_code
}

/// A persistent singly linked list, the structure the sort workload runs on.
pub type List = Option<Box<Node>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub head: i64,
    pub tail: List,
}

impl Drop for Node {
    fn drop(&mut self) {
        let mut next = self.tail.take();
        while let Some(mut n) = next {
            next = n.tail.take();
        }
    }
}

fn cons(head: i64, tail: List) -> List {
    Some(Box::new(Node { head, tail }))
}

pub fn iter(list: &List) -> impl Iterator<Item = i64> + '_ {
    let mut cur = list.as_deref();
    std::iter::from_fn(move || {
        let n = cur?;
        cur = n.tail.as_deref();
        Some(n.head)
    })
}

/// Fresh cells for `items`, in order, followed by `tail`.
fn build<I: IntoIterator<Item = i64>>(items: I, tail: List) -> List {
    let mut head: List = None;
    let mut cur = &mut head;
    for x in items {
        let node = cur.insert(Box::new(Node { head: x, tail: None }));
        cur = &mut node.tail;
    }
    *cur = tail;
    head
}

pub fn from_slice(xs: &[i64]) -> List {
    build(xs.iter().copied(), None)
}

pub fn to_vec(list: &List) -> Vec<i64> {
    iter(list).collect()
}

fn rev(list: &List) -> List {
    iter(list).fold(None, |acc, x| cons(x, acc))
}

/// Like the standard functional `partition`: accumulate both sides
/// reversed, then reverse them.
fn partition(list: &List, pred: impl Fn(i64) -> bool) -> (List, List) {
    let (mut yes, mut no) = (None, None);
    for x in iter(list) {
        if pred(x) {
            yes = cons(x, yes);
        } else {
            no = cons(x, no);
        }
    }
    (rev(&yes), rev(&no))
}

/// Copies `a` in front of `b`.
fn append(a: &List, b: List) -> List {
    build(iter(a), b)
}

fn small_case(list: &List) -> Option<List> {
    let first = list.as_deref()?;
    let Some(second) = first.tail.as_deref() else { return Some(cons(first.head, None)) };
    if second.tail.is_some() {
        return None;
    }
    let (x, y) = (first.head, second.head);
    Some(if x < y { from_slice(&[x, y]) } else { from_slice(&[y, x]) })
}

/// First-element pivot, no randomization.
pub fn quicksort(list: &List) -> List {
    let node = list.as_deref()?;
    if let Some(done) = small_case(list) {
        return done;
    }
    let x = node.head;
    let (left, right) = partition(&node.tail, |y| y <= x);
    let sorted_left = quicksort(&left);
    let sorted_right = quicksort(&right);
    append(&sorted_left, cons(x, sorted_right))
}

fn merge(mut xs: &List, mut ys: &List) -> List {
    let mut head: List = None;
    let mut cur = &mut head;
    loop {
        let (x, y) = match (xs.as_deref(), ys.as_deref()) {
            (None, _) => {
                *cur = build(iter(ys), None);
                return head;
            }
            (_, None) => {
                *cur = build(iter(xs), None);
                return head;
            }
            (Some(x), Some(y)) => (x, y),
        };
        let v = if x.head <= y.head {
            xs = &x.tail;
            x.head
        } else {
            ys = &y.tail;
            y.head
        };
        let node = cur.insert(Box::new(Node { head: v, tail: None }));
        cur = &mut node.tail;
    }
}

/// Splits by alternately consing onto two accumulators, then merges.
pub fn mergesort(list: &List) -> List {
    if list.is_none() {
        return None;
    }
    if let Some(done) = small_case(list) {
        return done;
    }
    let (mut xs, mut ys): (List, List) = (None, None);
    for z in iter(list) {
        let next_ys = cons(z, ys.take());
        ys = xs.take();
        xs = next_ys;
    }
    merge(&mergesort(&xs), &mergesort(&ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortImpl {
    Quicksort,
    Mergesort,
}

impl SortImpl {
    pub fn sort(self, list: &List) -> List {
        match self {
            SortImpl::Quicksort => quicksort(list),
            SortImpl::Mergesort => mergesort(list),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortConfig {
    pub implementation: SortImpl,
    pub size: usize,
    pub niters: u64,
    pub seed: u64,
}

impl SortConfig {
    pub fn from_lookup<F: Fn(&str) -> Option<String>>(lookup: F) -> Result<Self, EnvError> {
        let env = Env(lookup);
        Ok(SortConfig {
            implementation: env.required("IMPL", "[quicksort | mergesort]", |s| match s {
                "quicksort" => Some(SortImpl::Quicksort),
                "mergesort" => Some(SortImpl::Mergesort),
                _ => None,
            })?,
            size: env.required("SIZE", "a number", parse_int)?,
            niters: env.required("NITERS", "a number", parse_int)?,
            seed: env.optional("SEED", "a number", 0, parse_int)?,
        })
    }

    /// `size` integers drawn uniformly from `[0, size)`.
    pub fn input(&self) -> Vec<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.size).map(|_| rng.gen_range(0..self.size as i64)).collect()
    }
}

/// Runs the configured sort; `Err` when the first result is wrong.
pub fn run_sort(cfg: &SortConfig) -> Result<(), String> {
    let data = cfg.input();
    let mut expected = data.clone();
    expected.sort_unstable();
    let input = from_slice(&data);
    let output = cfg.implementation.sort(&input);
    if !iter(&output).eq(expected.iter().copied()) {
        return Err(format!("{:?} produced an incorrectly sorted list", cfg.implementation));
    }
    drop(output);
    for _ in 1..cfg.niters {
        black_box(cfg.implementation.sort(black_box(&input)));
    }
    Ok(())
}

/// Entry point of the sort workload; returns the exit status.
pub fn sort_main() -> i32 {
    let cfg = match SortConfig::from_lookup(process_env) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    // Quicksort recursion depth grows with the input on adversarial data.
    let stack = (cfg.size.saturating_mul(512)).clamp(64 << 20, 4 << 30);
    let worker = thread::Builder::new().stack_size(stack).spawn(move || run_sort(&cfg));
    match worker.map(|h| h.join()) {
        Ok(Ok(Ok(()))) => 0,
        Ok(Ok(Err(msg))) => {
            eprintln!("assertion failed: {msg}");
            1
        }
        Ok(Err(_)) => 1,
        Err(e) => {
            eprintln!("cannot start worker thread: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let m: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| m.get(k).cloned()
    }

    #[test]
    fn sort_env_messages() {
        let err = SortConfig::from_lookup(lookup(&[])).unwrap_err();
        assert_eq!(err.message, "environment variable \"IMPL\" is missing");
        let err = SortConfig::from_lookup(lookup(&[("IMPL", "bogosort")])).unwrap_err();
        assert_eq!(err.message, "environment variable \"IMPL\" has incorrect value \"bogosort\"; expected [quicksort | mergesort]");
        let err = SortConfig::from_lookup(lookup(&[("IMPL", "quicksort"), ("SIZE", "ten")])).unwrap_err();
        assert!(err.message.contains("\"SIZE\" has incorrect value \"ten\"; expected a number"));
        let cfg = SortConfig::from_lookup(lookup(&[("IMPL", "mergesort"), ("SIZE", "10_000"), ("NITERS", "100")])).unwrap();
        assert_eq!((cfg.size, cfg.niters, cfg.implementation), (10_000, 100, SortImpl::Mergesort));
    }

    #[test]
    fn sorts_agree_with_trusted_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(0..=100);
            let xs: Vec<i64> = (0..n).map(|_| rng.gen_range(-20..20)).collect();
            let mut want = xs.clone();
            want.sort();
            let l = from_slice(&xs);
            assert_eq!(to_vec(&quicksort(&l)), want);
            assert_eq!(to_vec(&mergesort(&l)), want);
        }
    }

    #[test]
    fn degenerate_inputs() {
        for size in [0, 1, 2] {
            let cfg = SortConfig { implementation: SortImpl::Quicksort, size, niters: 1, seed: 3 };
            run_sort(&cfg).unwrap();
            run_sort(&SortConfig { implementation: SortImpl::Mergesort, ..cfg }).unwrap();
        }
    }

    #[test]
    fn long_lists_drop_without_recursion() {
        let l = from_slice(&(0..1_000_000).collect::<Vec<_>>());
        assert_eq!(iter(&l).count(), 1_000_000);
    }

    #[test]
    fn synthetic_cost_model() {
        let cfg = SyntheticConfig::from_lookup(lookup(&[("BASE_MS", "2"), ("NITERS", "10"), ("SETUP_MS", "5")])).unwrap();
        assert!((cfg.planned_cost(0) - 0.025).abs() < 1e-12);
        assert_eq!(cfg.planned_cost(0), cfg.planned_cost(9));

        let drift = SyntheticConfig::from_lookup(lookup(&[("BASE_MS", "100"), ("DRIFT_PCT", "2"), ("STATE_FILE", "/tmp/x")])).unwrap();
        assert!((drift.planned_cost(3) - 0.1 * 1.02f64.powi(3)).abs() < 1e-12);

        let outl = SyntheticConfig::from_lookup(lookup(&[("BASE_MS", "10"), ("OUTLIER_P", "1"), ("OUTLIER_MULT", "3")])).unwrap();
        assert!((outl.planned_cost(0) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn synthetic_env_errors() {
        assert!(SyntheticConfig::from_lookup(lookup(&[("DRIFT_PCT", "2")])).unwrap_err().message.contains("STATE_FILE"));
        assert!(SyntheticConfig::from_lookup(lookup(&[("BASE_MS", "-1")])).is_err());
        assert!(SyntheticConfig::from_lookup(lookup(&[("MODE", "nap")])).is_err());
        assert!(SyntheticConfig::from_lookup(lookup(&[("EXIT_CODE", "300")])).is_err());
    }

    #[test]
    fn state_file_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("state");
        assert_eq!(next_invocation(Some(&p)).unwrap(), 0);
        assert_eq!(next_invocation(Some(&p)).unwrap(), 1);
        assert_eq!(next_invocation(None).unwrap(), 0);
    }
}
