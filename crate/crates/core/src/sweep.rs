//! Input-size sweeps, iteration-count calibration and plot data.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{format_number, BenchmarkSpec, ParamPoint, RunPolicy, ValueDomain, Variant};
use crate::runner::{Executor, ResultSet, RunError, Runner};
use crate::stats::{NoiseReport, NoiseThresholds, Summary};

/// Calibration aims for runs between these bounds, in seconds.
pub const CALIBRATION_WINDOW: (f64, f64) = (0.2, 1.0);
/// Probe runs shorter than this are too dominated by startup cost to
/// extrapolate from.
const PROBE_MIN_TIME: f64 = 0.05;
const MAX_REPROBES: usize = 2;

/// Target run time: the geometric midpoint of [`CALIBRATION_WINDOW`].
pub fn calibration_target() -> f64 {
    (CALIBRATION_WINDOW.0 * CALIBRATION_WINDOW.1).sqrt()
}

/// Iteration count whose predicted run time hits the target.
pub fn iterations_for(per_iteration: f64) -> u64 {
    if per_iteration.is_nan() || per_iteration <= 0.0 {
        return 1;
    }
    ((calibration_target() / per_iteration).round() as u64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPoints {
    Explicit(Vec<String>),
    Generator { scale: Scale, start: f64, stop: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub spec_id: String,
    pub swept_param: String,
    pub points: SweepPoints,
    pub per_point_policy: RunPolicy,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("parameter `{0}` is not declared by the benchmark")]
    UnknownParam(String),
    #[error("a sweep needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("sweep value `{0}` is not a number")]
    NonNumeric(String),
    #[error("sweep values must be distinct, `{0}` repeats")]
    DuplicatePoint(String),
    #[error("log-scale sweep bounds must be positive")]
    NonPositiveLogBound,
}

impl SweepSpec {
    /// A sweep over the values the benchmark declares for `param`.
    pub fn from_benchmark(spec: &BenchmarkSpec, param: &str) -> Result<Self, SweepError> {
        let domain = spec.params.get(param).ok_or_else(|| SweepError::UnknownParam(param.to_string()))?;
        let points = match domain {
            ValueDomain::Values(v) => SweepPoints::Explicit(v.clone()),
            ValueDomain::Linear(g) => SweepPoints::Generator { scale: Scale::Linear, start: g.start, stop: g.stop, count: g.count },
            ValueDomain::Log(g) => SweepPoints::Generator { scale: Scale::Log, start: g.start, stop: g.stop, count: g.count },
        };
        Ok(SweepSpec {
            spec_id: spec.id.clone(),
            swept_param: param.to_string(),
            points,
            per_point_policy: spec.run_policy,
        })
    }

    pub fn is_log(&self) -> bool {
        matches!(self.points, SweepPoints::Generator { scale: Scale::Log, .. })
    }

    /// The sweep's points in ascending order, as (number, substituted text).
    pub fn values(&self) -> Result<Vec<(f64, String)>, SweepError> {
        let mut out: Vec<(f64, String)> = match &self.points {
            SweepPoints::Explicit(texts) => texts
                .iter()
                .map(|t| {
                    t.replace('_', "")
                        .parse::<f64>()
                        .map(|x| (x, t.clone()))
                        .map_err(|_| SweepError::NonNumeric(t.clone()))
                })
                .collect::<Result<_, _>>()?,
            SweepPoints::Generator { scale, start, stop, count } => {
                let g = crate::model::RangeGenerator { start: *start, stop: *stop, count: *count };
                let xs = match scale {
                    Scale::Linear => g.linear_points(),
                    Scale::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return Err(SweepError::NonPositiveLogBound);
                        }
                        g.log_points()
                    }
                };
                xs.into_iter().map(|x| (x, format_number(x))).collect()
            }
        };
        if out.len() < 2 {
            return Err(SweepError::TooFewPoints(out.len()));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(SweepError::DuplicatePoint(w[1].1.clone()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantPoint {
    pub variant: String,
    pub summary: Summary,
    pub noise: NoiseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointResult {
    pub value: f64,
    pub text: String,
    /// Iteration count chosen by calibration, when enabled.
    pub iterations: Option<u64>,
    pub results: Vec<VariantPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec_id: String,
    pub swept_param: String,
    pub log_scale: bool,
    pub session_id: String,
    pub variants: Vec<String>,
    pub complete: bool,
    pub points: Vec<SweepPointResult>,
}

/// Outcome of [`run_sweep`]: whatever was measured, plus the error that
/// stopped the sweep early, if any.
#[derive(Debug)]
pub struct SweepRun {
    pub result: SweepResult,
    pub result_sets: Vec<ResultSet>,
    pub error: Option<SweepFailure>,
}

#[derive(Debug, Error)]
pub enum SweepFailure {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Parameter values for the non-swept parameters; defaults to the
    /// first value of each declared domain.
    pub base_point: ParamPoint,
    /// Calibrate this iteration-count parameter at every point.
    pub calibrate: Option<String>,
    pub thresholds: NoiseThresholds,
}

/// Fills unspecified parameters with the first value of their domain.
pub fn default_point(spec: &BenchmarkSpec, overrides: &ParamPoint) -> ParamPoint {
    spec.params
        .iter()
        .map(|(name, dom)| {
            let v = overrides.get(name).cloned().or_else(|| dom.text_values().into_iter().next()).unwrap_or_default();
            (name.clone(), v)
        })
        .collect()
}

/// Runs every variant at every sweep point, ascending. Variants are
/// interleaved within each point.
pub fn run_sweep<E: Executor>(
    runner: &mut Runner<E>,
    spec: &BenchmarkSpec,
    sweep: &SweepSpec,
    variants: &[Variant],
    opts: &SweepOptions,
) -> Result<SweepRun, SweepError> {
    if !spec.params.contains_key(&sweep.swept_param) {
        return Err(SweepError::UnknownParam(sweep.swept_param.clone()));
    }
    let values = sweep.values()?;
    let mut result = SweepResult {
        spec_id: spec.id.clone(),
        swept_param: sweep.swept_param.clone(),
        log_scale: sweep.is_log(),
        session_id: runner.session.session_id.clone(),
        variants: variants.iter().map(|v| v.name.clone()).collect(),
        complete: false,
        points: Vec::new(),
    };
    let mut all_sets = Vec::new();
    let base = default_point(spec, &opts.base_point);

    for (value, text) in values {
        let mut point = base.clone();
        point.insert(sweep.swept_param.clone(), text.clone());

        let mut iterations = None;
        if let (Some(iter_param), Some(first)) = (&opts.calibrate, variants.first()) {
            match calibrate_iterations(runner, spec, first, &point, iter_param) {
                Ok(c) => {
                    point.insert(iter_param.clone(), c.count.to_string());
                    iterations = Some(c.count);
                }
                Err(e) => return Ok(SweepRun { result, result_sets: all_sets, error: Some(e.into()) }),
            }
        }

        let sets = match runner.run_interleaved(spec, variants, &point, &sweep.per_point_policy) {
            Ok(s) => s,
            Err(e) => return Ok(SweepRun { result, result_sets: all_sets, error: Some(e.into()) }),
        };
        let mut results = Vec::with_capacity(sets.len());
        for rs in &sets {
            let summary = rs.summary().map_err(RunError::from);
            let noise = rs.noise(&opts.thresholds).map_err(RunError::from);
            match (summary, noise) {
                (Ok(summary), Ok(noise)) => results.push(VariantPoint { variant: rs.variant_name.clone(), summary, noise }),
                (Err(e), _) | (_, Err(e)) => {
                    return Ok(SweepRun { result, result_sets: all_sets, error: Some(e.into()) })
                }
            }
        }
        all_sets.extend(sets);
        result.points.push(SweepPointResult { value, text, iterations, results });
    }
    result.complete = true;
    Ok(SweepRun { result, result_sets: all_sets, error: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub count: u64,
    /// Wall time of the final run at `count` iterations.
    pub measured: f64,
    /// Every (iterations, seconds) probe, in order.
    pub probes: Vec<(u64, f64)>,
    /// A single iteration already exceeds the window.
    pub oversized: bool,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("calibration did not land in [{:.1}, {:.1}] s: {count} iterations took {measured:.3} s", CALIBRATION_WINDOW.0, CALIBRATION_WINDOW.1)]
    CalibrationFailed { count: u64, measured: f64, probes: Vec<(u64, f64)> },
    #[error("parameter `{0}` is not declared by the benchmark")]
    UnknownParam(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn in_window(t: f64) -> bool {
    (CALIBRATION_WINDOW.0..=CALIBRATION_WINDOW.1).contains(&t)
}

/// Chooses an iteration count for `iter_param` whose run lands in the
/// calibration window. The parameter must scale work roughly linearly.
pub fn calibrate_iterations<E: Executor>(
    runner: &mut Runner<E>,
    spec: &BenchmarkSpec,
    variant: &Variant,
    point: &ParamPoint,
    iter_param: &str,
) -> Result<Calibration, CalibrationError> {
    if !spec.params.contains_key(iter_param) {
        return Err(CalibrationError::UnknownParam(iter_param.to_string()));
    }
    let mut probe_spec = spec.clone();
    probe_spec.warmup_count = 0;
    probe_spec.run_policy = RunPolicy::fixed(1);
    let mut probes = Vec::new();
    let mut time_at = |n: u64, probes: &mut Vec<(u64, f64)>| -> Result<f64, RunError> {
        let mut p = point.clone();
        p.insert(iter_param.to_string(), n.to_string());
        let t = runner.run_series(&probe_spec, variant, &p)?.measurements[0].wall_time;
        probes.push((n, t));
        Ok(t)
    };

    let mut n = 1u64;
    let mut t = time_at(n, &mut probes)?;
    while t < PROBE_MIN_TIME && n < u64::MAX / 100 {
        // Grow geometrically, jumping further when the probe is far too short.
        let factor = if t > 0.0 { (PROBE_MIN_TIME / t).clamp(2.0, 100.0) } else { 100.0 };
        n = ((n as f64) * factor).ceil() as u64;
        t = time_at(n, &mut probes)?;
    }
    if n == 1 && t > CALIBRATION_WINDOW.1 {
        return Ok(Calibration { count: 1, measured: t, probes, oversized: true });
    }

    let mut reprobes = 0;
    let mut next = iterations_for(t / n as f64);
    loop {
        let measured = time_at(next, &mut probes)?;
        if in_window(measured) {
            return Ok(Calibration { count: next, measured, probes, oversized: false });
        }
        if next == 1 && measured > CALIBRATION_WINDOW.1 {
            return Ok(Calibration { count: 1, measured, probes, oversized: true });
        }
        if reprobes == MAX_REPROBES {
            return Err(CalibrationError::CalibrationFailed { count: next, measured, probes });
        }
        reprobes += 1;
        // Re-aim along the secant through the last two probes, which
        // accounts for fixed startup cost that t/n ignores.
        let slope = (measured - t) / (next as f64 - n as f64);
        let aimed = if slope > 0.0 && next != n {
            next as f64 + (calibration_target() - measured) / slope
        } else {
            next as f64 * calibration_target() / measured.max(f64::MIN_POSITIVE)
        };
        n = next;
        t = measured;
        next = (aimed.round().max(1.0) as u64).max(1);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub data: PathBuf,
    pub script: PathBuf,
    pub image: PathBuf,
}

fn column_name(variant: &str, stat: &str) -> String {
    format!("{}_{stat}", variant.replace([',', ' ', '\n'], "_"))
}

const STATS_COLUMNS: [&str; 4] = ["mean", "stddev", "min", "max"];

/// Comma-separated plot data, one row per point, header prefixed by `#`.
pub fn plot_data_text(sr: &SweepResult) -> String {
    let mut header = vec![sr.swept_param.clone()];
    for v in &sr.variants {
        header.extend(STATS_COLUMNS.iter().map(|s| column_name(v, s)));
    }
    let mut out = format!("# {}\n", header.join(","));
    for p in &sr.points {
        let mut row = vec![format!("{}", p.value)];
        for v in &sr.variants {
            match p.results.iter().find(|r| &r.variant == v) {
                Some(r) => {
                    let s = &r.summary;
                    row.extend([s.mean, s.stddev, s.min, s.max].iter().map(|x| format!("{x}")));
                }
                None => row.extend(std::iter::repeat_n("NaN".to_string(), STATS_COLUMNS.len())),
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn gp_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// A gnuplot script drawing mean ± stddev error bars for every variant.
pub fn plot_script_text(sr: &SweepResult, data_file: &str, image_file: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal svg size 800,600 noenhanced");
    let _ = writeln!(s, "set output {}", gp_quote(image_file));
    let _ = writeln!(s, "set title {}", gp_quote(&format!("{}: wall time vs {}", sr.spec_id, sr.swept_param)));
    let _ = writeln!(s, "set xlabel {}", gp_quote(&sr.swept_param));
    let _ = writeln!(s, "set ylabel 'wall time [s]'");
    let _ = writeln!(s, "set key left top");
    if sr.log_scale {
        let _ = writeln!(s, "set logscale x");
    }
    let plots: Vec<String> = sr
        .variants
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mean_col = 2 + i * STATS_COLUMNS.len();
            let file = if i == 0 { gp_quote(data_file) } else { "''".to_string() };
            format!("{file} using 1:{}:{} with yerrorlines title {}", mean_col, mean_col + 1, gp_quote(v))
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Writes `<stem>.csv` and `<stem>.gp`; the script renders `<stem>.svg`
/// and refers to the data by file name, relative to its own directory.
pub fn emit_plot_data(sr: &SweepResult, stem: &Path) -> io::Result<PlotFiles> {
    if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let with_ext = |ext: &str| {
        let mut name = stem.file_name().unwrap_or_default().to_os_string();
        name.push(ext);
        stem.with_file_name(name)
    };
    let files = PlotFiles { data: with_ext(".csv"), script: with_ext(".gp"), image: with_ext(".svg") };
    let file_name = |p: &Path| p.file_name().unwrap_or_default().to_string_lossy().into_owned();
    fs::write(&files.data, plot_data_text(sr))?;
    fs::write(&files.script, plot_script_text(sr, &file_name(&files.data), &file_name(&files.image)))?;
    Ok(files)
}

/// Parses plot data back into (header columns, numeric rows).
pub fn parse_plot_data(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next()?.strip_prefix('#')?.trim().split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().parse::<f64>().ok()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    Some((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RangeGenerator, DEFAULT_VARIANT};
    use crate::runner::testing::{linear_spec, session, CostModel};
    use crate::stats::summarize;

    #[test]
    fn target_arithmetic() {
        assert!((calibration_target() - 0.447_213_595_5).abs() < 1e-9);
        assert_eq!(iterations_for(0.005), 89);
        assert_eq!(iterations_for(0.00447), 100);
        assert_eq!(iterations_for(2.0), 1);
        assert_eq!(iterations_for(0.0), 1);
    }

    fn point() -> ParamPoint {
        [("niters".to_string(), "1".to_string())].into_iter().collect()
    }

    #[test]
    fn calibrates_linear_model() {
        let spec = linear_spec();
        let mut r = Runner::new(CostModel::new(0.0, 0.005, "NITERS"), session());
        let c = calibrate_iterations(&mut r, &spec, &Variant::new(DEFAULT_VARIANT), &point(), "niters").unwrap();
        assert_eq!(c.count, 89);
        assert!((c.measured - 0.445).abs() < 1e-9);
        assert!(!c.oversized);
    }

    #[test]
    fn calibration_with_setup_cost_still_lands() {
        let spec = linear_spec();
        let mut r = Runner::new(CostModel::new(0.15, 0.0001, "NITERS"), session());
        let c = calibrate_iterations(&mut r, &spec, &Variant::new(DEFAULT_VARIANT), &point(), "niters").unwrap();
        assert!(in_window(c.measured), "{c:?}");
    }

    #[test]
    fn oversized_single_iteration() {
        let spec = linear_spec();
        let mut r = Runner::new(CostModel::new(0.0, 2.0, "NITERS"), session());
        let c = calibrate_iterations(&mut r, &spec, &Variant::new(DEFAULT_VARIANT), &point(), "niters").unwrap();
        assert_eq!(c.count, 1);
        assert!(c.oversized);
    }

    #[test]
    fn calibration_fails_when_unreachable() {
        // Constant 0.1 s regardless of the iteration count: never reaches 0.2 s.
        let spec = linear_spec();
        let mut r = Runner::new(CostModel::new(0.1, 0.0, "NITERS"), session());
        let err = calibrate_iterations(&mut r, &spec, &Variant::new(DEFAULT_VARIANT), &point(), "niters").unwrap_err();
        assert!(matches!(err, CalibrationError::CalibrationFailed { .. }), "{err}");
    }

    fn sort_like() -> BenchmarkSpec {
        let mut spec = linear_spec();
        spec.env_template.insert("SIZE".into(), "{size}".into());
        spec.env_template.insert("IMPL".into(), "{impl}".into());
        spec.params.insert("size".into(), ValueDomain::Values(vec!["10_000".into(), "1000".into()]));
        spec.variants = vec![Variant::new("quicksort").bind("impl", "q"), Variant::new("mergesort").bind("impl", "m")];
        spec.run_policy = RunPolicy::fixed(3);
        spec
    }

    /// Cost proportional to SIZE.
    struct SizeModel;
    impl Executor for SizeModel {
        fn execute(&mut self, inv: &crate::model::ConcreteInvocation) -> Result<crate::runner::Execution, RunError> {
            let size: f64 = inv.env["SIZE"].replace('_', "").parse().unwrap();
            let factor = if inv.env["IMPL"] == "q" { 1.3 } else { 1.0 };
            let wall = 1e-5 * size * factor;
            Ok(crate::runner::Execution {
                measurement: crate::runner::Measurement { wall_time: wall, user_time: wall, system_time: 0.0, max_rss: 0, exit_status: 0 },
                output_tail: String::new(),
                notes: vec![],
            })
        }
    }

    #[test]
    fn sweep_structure_and_order() {
        let spec = sort_like();
        let sweep = SweepSpec::from_benchmark(&spec, "size").unwrap();
        let mut r = Runner::new(SizeModel, session());
        let run = run_sweep(&mut r, &spec, &sweep, &spec.variants, &SweepOptions::default()).unwrap();
        assert!(run.error.is_none());
        let sr = run.result;
        assert!(sr.complete);
        assert_eq!(sr.points.iter().map(|p| p.value).collect::<Vec<_>>(), vec![1000.0, 10000.0]);
        assert_eq!(sr.points[1].text, "10_000");
        assert_eq!(sr.points.iter().map(|p| p.results.len()).sum::<usize>(), 4);
        assert_eq!(run.result_sets.len(), 4);
        for v in 0..2 {
            assert!(sr.points[0].results[v].summary.mean <= sr.points[1].results[v].summary.mean);
        }
    }

    #[test]
    fn single_point_sweep_is_rejected_but_series_matches() {
        let mut spec = sort_like();
        spec.variants.truncate(1);
        let mut sweep = SweepSpec::from_benchmark(&spec, "size").unwrap();
        sweep.points = SweepPoints::Explicit(vec!["1000".into()]);
        assert!(matches!(sweep.values(), Err(SweepError::TooFewPoints(1))));

        sweep.points = SweepPoints::Explicit(vec!["1000".into(), "2000".into()]);
        let mut r = Runner::new(SizeModel, session());
        let run = run_sweep(&mut r, &spec, &sweep, &spec.variants, &SweepOptions::default()).unwrap();
        let mut p = default_point(&spec, &ParamPoint::new());
        p.insert("size".into(), "1000".into());
        let direct = r.run_series(&spec, &spec.variants[0], &p).unwrap().summary().unwrap();
        assert_eq!(run.result.points[0].results[0].summary, direct);
    }

    #[test]
    fn failing_point_keeps_partial_results() {
        struct FailAbove(f64);
        impl Executor for FailAbove {
            fn execute(&mut self, inv: &crate::model::ConcreteInvocation) -> Result<crate::runner::Execution, RunError> {
                let size: f64 = inv.env["SIZE"].replace('_', "").parse().unwrap();
                let mut exec = SizeModel.execute(inv)?;
                if size > self.0 {
                    exec.measurement.exit_status = 3;
                }
                Ok(exec)
            }
        }
        let spec = sort_like();
        let sweep = SweepSpec::from_benchmark(&spec, "size").unwrap();
        let mut r = Runner::new(FailAbove(5000.0), session());
        let run = run_sweep(&mut r, &spec, &sweep, &spec.variants, &SweepOptions::default()).unwrap();
        assert!(matches!(run.error, Some(SweepFailure::Run(RunError::NonZeroExit { status: 3, .. }))));
        assert!(!run.result.complete);
        assert_eq!(run.result.points.len(), 1);
        assert_eq!(run.result_sets.len(), 2);
    }

    #[test]
    fn log_generator_sweep() {
        let mut spec = sort_like();
        spec.params.insert("size".into(), ValueDomain::Log(RangeGenerator { start: 1e3, stop: 1e6, count: 4 }));
        let sweep = SweepSpec::from_benchmark(&spec, "size").unwrap();
        assert!(sweep.is_log());
        let vals: Vec<f64> = sweep.values().unwrap().into_iter().map(|v| v.0).collect();
        assert_eq!(vals, vec![1e3, 1e4, 1e5, 1e6]);
    }

    #[test]
    fn unknown_param() {
        let spec = sort_like();
        assert!(matches!(SweepSpec::from_benchmark(&spec, "nope"), Err(SweepError::UnknownParam(_))));
    }

    fn tiny_result() -> SweepResult {
        let noise = crate::stats::noise_report_from_series(&[1.0, 1.1], &[0.0, 0.0], &NoiseThresholds::default()).unwrap();
        let mk = |v: &str, xs: &[f64]| VariantPoint { variant: v.into(), summary: summarize(xs).unwrap(), noise: noise.clone() };
        SweepResult {
            spec_id: "sort".into(),
            swept_param: "size".into(),
            log_scale: true,
            session_id: "s".into(),
            variants: vec!["quicksort".into(), "mergesort".into()],
            complete: true,
            points: vec![
                SweepPointResult { value: 1000.0, text: "1000".into(), iterations: None, results: vec![mk("quicksort", &[0.1, 0.13]), mk("mergesort", &[0.07, 0.0712])] },
                SweepPointResult { value: 10000.0, text: "10000".into(), iterations: None, results: vec![mk("quicksort", &[1.0, 1.3]), mk("mergesort", &[0.7, 0.7123456789])] },
            ],
        }
    }

    #[test]
    fn plot_data_shape_and_round_trip() {
        let sr = tiny_result();
        let text = plot_data_text(&sr);
        let (header, rows) = parse_plot_data(&text).unwrap();
        assert_eq!(header.len(), 9);
        assert_eq!(&header[..], &[
            "size", "quicksort_mean", "quicksort_stddev", "quicksort_min", "quicksort_max",
            "mergesort_mean", "mergesort_stddev", "mergesort_min", "mergesort_max",
        ]);
        assert_eq!(rows.len(), 2);
        for (row, p) in rows.iter().zip(&sr.points) {
            assert_eq!(row[0], p.value);
            for (i, r) in p.results.iter().enumerate() {
                assert_eq!(row[1 + 4 * i], r.summary.mean);
                assert_eq!(row[2 + 4 * i], r.summary.stddev);
            }
        }
    }

    #[test]
    fn plot_script_references_columns() {
        let sr = tiny_result();
        let gp = plot_script_text(&sr, "sort-size.csv", "sort-size.svg");
        assert!(gp.contains("set logscale x"));
        assert!(gp.contains("'sort-size.csv' using 1:2:3 with yerrorlines title 'quicksort'"));
        assert!(gp.contains("'' using 1:6:7 with yerrorlines title 'mergesort'"));
        let mut lin = sr.clone();
        lin.log_scale = false;
        assert!(!plot_script_text(&lin, "d.csv", "d.svg").contains("logscale"));
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plot_data(&tiny_result(), &dir.path().join("plots/sort-size")).unwrap();
        assert!(files.data.ends_with("sort-size.csv"));
        assert!(fs::read_to_string(&files.script).unwrap().contains("'sort-size.csv'"));
    }
}
