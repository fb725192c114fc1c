//! Summaries, speedup ratios and the noise detectors.
//!
//! Everything here is a pure function of its inputs. Times are seconds.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty series")]
    EmptySeries,
    #[error("sample {index} is not a finite nonnegative number: {value}")]
    InvalidSample { index: usize, value: f64 },
    #[error("series too short for this detector: {n} < {min}")]
    SeriesTooShort { n: usize, min: usize },
    #[error("summary has a zero or invalid central value")]
    DegenerateSummary,
    #[error("ratio {0} is not positive")]
    NonPositiveRatio(f64),
}

/// Which central value represents a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMode {
    #[default]
    Mean,
    Min,
}

impl fmt::Display for SummaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SummaryMode::Mean => "mean",
            SummaryMode::Min => "min",
        })
    }
}

impl std::str::FromStr for SummaryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(SummaryMode::Mean),
            "min" => Ok(SummaryMode::Min),
            other => Err(format!("unknown summary mode `{other}` (expected mean or min)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one sample.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub n: usize,
    pub single_sample: bool,
}

impl Summary {
    pub fn central(&self, mode: SummaryMode) -> f64 {
        match mode {
            SummaryMode::Mean => self.mean,
            SummaryMode::Min => self.min,
        }
    }

    pub fn cv(&self) -> f64 {
        if self.mean > 0.0 {
            self.stddev / self.mean
        } else {
            0.0
        }
    }

    /// A summary built from reported figures rather than raw samples.
    pub fn from_reported(mean: f64, stddev: f64, min: f64, max: f64, n: usize) -> Self {
        Summary { mean, stddev, min, max, median: mean.clamp(min, max), n, single_sample: n == 1 }
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

pub fn summarize(samples: &[f64]) -> Result<Summary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(StatsError::InvalidSample { index, value });
    }
    let n = samples.len();
    let sorted = sorted_copy(samples);
    let (min, max) = (sorted[0], sorted[n - 1]);
    // Summation order is fixed by sorting so the result is permutation invariant.
    let m = (sorted.iter().sum::<f64>() / n as f64).clamp(min, max);
    let stddev = if n > 1 {
        (sorted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary { mean: m, stddev, min, max, median: median_of_sorted(&sorted), n, single_sample: n == 1 })
}

/// A speedup ratio `numerator / denominator` with propagated uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioWithUncertainty {
    pub ratio: f64,
    pub sigma: f64,
    pub numerator_id: String,
    pub denominator_id: String,
    pub mode: SummaryMode,
}

impl RatioWithUncertainty {
    pub fn labeled<A: Into<String>, B: Into<String>>(mut self, numerator: A, denominator: B) -> Self {
        self.numerator_id = numerator.into();
        self.denominator_id = denominator.into();
        self
    }

    /// `r ± σ` with two decimals, the format used in comparison tables.
    pub fn display(&self) -> String {
        format!("{:.2} ± {:.2}", self.ratio, self.sigma)
    }
}

/// Ratio of central values `a / b`.
///
/// The uncertainty combines relative standard deviations in quadrature,
/// `ratio * sqrt((σa/μa)² + (σb/μb)²)`. In min mode the same relative
/// deviations are applied to the ratio of minima, which is only an
/// approximation.
pub fn compare(a: &Summary, b: &Summary, mode: SummaryMode) -> Result<RatioWithUncertainty, StatsError> {
    let (ca, cb) = (a.central(mode), b.central(mode));
    if !(ca > 0.0 && cb > 0.0 && a.mean > 0.0 && b.mean > 0.0) {
        return Err(StatsError::DegenerateSummary);
    }
    let ratio = ca / cb;
    let rel = (a.stddev / a.mean).hypot(b.stddev / b.mean);
    Ok(RatioWithUncertainty {
        ratio,
        sigma: ratio * rel,
        numerator_id: String::new(),
        denominator_id: String::new(),
        mode,
    })
}

/// Geometric mean, the only aggregate offered for ratios.
pub fn geometric_mean(ratios: &[f64]) -> Result<f64, StatsError> {
    if ratios.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    if let Some(&bad) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(StatsError::NonPositiveRatio(bad));
    }
    Ok((ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp())
}

pub const OUTLIER_MIN_SAMPLES: usize = 4;
pub const OUTLIER_Z_THRESHOLD: f64 = 3.5;
const MAD_SCALE: f64 = 0.6745;

/// Indices whose modified z-score `0.6745·|x − median| / MAD` exceeds 3.5.
///
/// With a zero MAD every value that differs from the median is flagged.
pub fn detect_outliers(samples: &[f64]) -> Result<Vec<usize>, StatsError> {
    if samples.len() < OUTLIER_MIN_SAMPLES {
        return Err(StatsError::SeriesTooShort { n: samples.len(), min: OUTLIER_MIN_SAMPLES });
    }
    let med = median_of_sorted(&sorted_copy(samples));
    let deviations: Vec<f64> = samples.iter().map(|x| (x - med).abs()).collect();
    let mad = median_of_sorted(&sorted_copy(&deviations));
    Ok(deviations
        .iter()
        .enumerate()
        .filter(|(_, &d)| if mad == 0.0 { d != 0.0 } else { MAD_SCALE * d / mad > OUTLIER_Z_THRESHOLD })
        .map(|(i, _)| i)
        .collect())
}

pub const TREND_MIN_SAMPLES: usize = 8;
pub const TREND_RHO_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Spearman correlation between run index and wall time.
    pub rho: f64,
    pub flagged: bool,
}

/// 1-based ranks, ties receiving the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Rank correlation between run order and the samples.
pub fn detect_trend(samples: &[f64]) -> TrendReport {
    if samples.len() < 2 {
        return TrendReport { rho: 0.0, flagged: false };
    }
    let index: Vec<f64> = (0..samples.len()).map(|i| i as f64).collect();
    let rho = spearman(&index, samples);
    TrendReport { rho, flagged: samples.len() >= TREND_MIN_SAMPLES && rho.abs() >= TREND_RHO_THRESHOLD }
}

/// Thresholds used to classify noise. Configurable per project.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseThresholds {
    pub cv_elevated: f64,
    pub cv_high: f64,
    pub system_high: f64,
}

impl Default for NoiseThresholds {
    fn default() -> Self {
        NoiseThresholds { cv_elevated: 0.02, cv_high: 0.04, system_high: 0.10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvVerdict {
    Ok,
    Elevated,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemVerdict {
    Ok,
    High,
}

impl fmt::Display for CvVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvVerdict::Ok => "ok",
            CvVerdict::Elevated => "elevated",
            CvVerdict::High => "high",
        })
    }
}

impl fmt::Display for SystemVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemVerdict::Ok => "ok",
            SystemVerdict::High => "high",
        })
    }
}

pub fn cv_verdict(cv: f64, t: &NoiseThresholds) -> CvVerdict {
    if cv < t.cv_elevated {
        CvVerdict::Ok
    } else if cv < t.cv_high {
        CvVerdict::Elevated
    } else {
        CvVerdict::High
    }
}

pub fn system_verdict(fraction: f64, t: &NoiseThresholds) -> SystemVerdict {
    if fraction > t.system_high {
        SystemVerdict::High
    } else {
        SystemVerdict::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub cv: f64,
    pub cv_verdict: CvVerdict,
    /// `None` when the series is too short for outlier detection.
    pub outlier_indices: Option<Vec<usize>>,
    pub trend: TrendReport,
    pub system_fraction: f64,
    pub system_verdict: SystemVerdict,
}

impl NoiseReport {
    pub fn has_warnings(&self) -> bool {
        self.cv_verdict != CvVerdict::Ok
            || self.system_verdict != SystemVerdict::Ok
            || self.trend.flagged
            || self.outlier_indices.as_ref().is_some_and(|o| !o.is_empty())
    }

    /// One-line human summary.
    pub fn describe(&self) -> String {
        let outliers = match &self.outlier_indices {
            None => "n/a".to_string(),
            Some(v) if v.is_empty() => "none".to_string(),
            Some(v) => format!("{} (runs {:?})", v.len(), v),
        };
        let trend = if self.trend.flagged { " FLAGGED" } else { "" };
        format!(
            "cv {:.1}% ({}), system {:.1}% ({}), outliers {}, trend rho {:+.2}{}",
            self.cv * 100.0,
            self.cv_verdict,
            self.system_fraction * 100.0,
            self.system_verdict,
            outliers,
            self.trend.rho,
            trend
        )
    }
}

/// Noise diagnostics from a series of wall and system times in run order.
pub fn noise_report_from_series(wall: &[f64], system: &[f64], t: &NoiseThresholds) -> Result<NoiseReport, StatsError> {
    let s = summarize(wall)?;
    let cv = s.cv();
    let system_fraction = if s.mean > 0.0 && !system.is_empty() { mean(system) / s.mean } else { 0.0 };
    Ok(NoiseReport {
        cv,
        cv_verdict: cv_verdict(cv, t),
        outlier_indices: detect_outliers(wall).ok(),
        trend: detect_trend(wall),
        system_fraction,
        system_verdict: system_verdict(system_fraction, t),
    })
}

/// Whether two summaries are too close to plausibly come from different
/// implementations: means within half the larger deviation and ranges
/// overlapping on at least 90% of the narrower one.
pub fn indistinguishable(a: &Summary, b: &Summary) -> bool {
    let close = (a.mean - b.mean).abs() <= 0.5 * a.stddev.max(b.stddev);
    close && range_overlap_fraction(a, b) >= 0.9
}

/// Overlap of `[min, max]` ranges as a fraction of the narrower range.
pub fn range_overlap_fraction(a: &Summary, b: &Summary) -> f64 {
    let inter = a.max.min(b.max) - a.min.max(b.min);
    let narrow = (a.max - a.min).min(b.max - b.min);
    if narrow <= 0.0 {
        // A degenerate range overlaps fully iff it lies inside the other.
        return if inter >= 0.0 { 1.0 } else { 0.0 };
    }
    (inter / narrow).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_basic() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.stddev, s.median, s.min, s.max), (2.0, 1.0, 2.0, 1.0, 3.0));
        let one = summarize(&[5.0]).unwrap();
        assert!(one.single_sample);
        assert_eq!((one.mean, one.min, one.max, one.median, one.stddev), (5.0, 5.0, 5.0, 5.0, 0.0));
        assert_eq!(summarize(&[2.0, 2.0, 2.0]).unwrap().stddev, 0.0);
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert_eq!(summarize(&[]), Err(StatsError::EmptySeries));
        assert!(matches!(summarize(&[1.0, -1.0]), Err(StatsError::InvalidSample { index: 1, .. })));
    }

    #[test]
    fn compare_reproduces_reported_ratios() {
        let quick = Summary::from_reported(0.6226, 0.0148, 0.5986, 0.6477, 10);
        let merge = Summary::from_reported(0.4615, 0.0056, 0.4539, 0.4692, 10);
        assert_eq!(compare(&quick, &merge, SummaryMode::Mean).unwrap().display(), "1.35 ± 0.04");
        let q2 = Summary::from_reported(608.6, 17.0, 576.5, 636.7, 10);
        let m2 = Summary::from_reported(466.9, 7.6, 454.1, 476.1, 10);
        assert_eq!(compare(&q2, &m2, SummaryMode::Mean).unwrap().display(), "1.30 ± 0.04");
        assert_eq!(compare(&q2, &q2, SummaryMode::Mean).unwrap().ratio, 1.0);
    }

    #[test]
    fn compare_rejects_degenerate() {
        let zero = Summary::from_reported(0.0, 0.0, 0.0, 0.0, 3);
        let one = Summary::from_reported(1.0, 0.1, 0.9, 1.1, 3);
        assert_eq!(compare(&zero, &one, SummaryMode::Mean), Err(StatsError::DegenerateSummary));
        assert_eq!(compare(&one, &zero, SummaryMode::Min), Err(StatsError::DegenerateSummary));
    }

    #[test]
    fn min_mode_uses_minima() {
        let a = Summary::from_reported(2.0, 0.2, 1.5, 2.5, 5);
        let b = Summary::from_reported(1.0, 0.1, 0.5, 1.5, 5);
        let r = compare(&a, &b, SummaryMode::Min).unwrap();
        assert_eq!(r.ratio, 3.0);
        assert!((r.sigma - 3.0 * (0.1f64.hypot(0.1))).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_cases() {
        assert!((geometric_mean(&[2.0, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(geometric_mean(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((geometric_mean(&[4.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(geometric_mean(&[1.0, 0.0]), Err(StatsError::NonPositiveRatio(0.0)));
        assert_eq!(geometric_mean(&[]), Err(StatsError::EmptySeries));
    }

    #[test]
    fn outliers_examples() {
        assert_eq!(detect_outliers(&[100.0, 101.0, 99.0, 100.0, 100.0, 150.0]).unwrap(), vec![5]);
        assert_eq!(detect_outliers(&[3.0; 6]).unwrap(), Vec::<usize>::new());
        let uniform: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(detect_outliers(&uniform).unwrap(), Vec::<usize>::new());
        // MAD is zero but one value differs.
        assert_eq!(detect_outliers(&[1.0, 1.0, 1.0, 1.0, 2.0]).unwrap(), vec![4]);
        assert_eq!(detect_outliers(&[1.0, 2.0, 3.0]), Err(StatsError::SeriesTooShort { n: 3, min: 4 }));
    }

    #[test]
    fn trend_examples() {
        let inc: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let t = detect_trend(&inc);
        assert_eq!(t.rho, 1.0);
        assert!(t.flagged);
        let constant = detect_trend(&[2.0; 10]);
        assert_eq!(constant, TrendReport { rho: 0.0, flagged: false });
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let a = detect_trend(&alt);
        // Oracle: tied ranks are 3 and 8, so sxy = 12.5, sxx = 82.5, syy = 62.5
        // and rho = 1/sqrt(33).
        assert!((a.rho - 1.0 / 33f64.sqrt()).abs() < 1e-12, "{}", a.rho);
        assert!(!a.flagged);
        // Too short to flag even when perfectly monotone.
        assert!(!detect_trend(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).flagged);
        assert_eq!(detect_trend(&[1.0]).rho, 0.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    /// Standardizes a base series to the given mean and sample deviation.
    fn shaped(mean_target: f64, sd_target: f64) -> Vec<f64> {
        let base = [0.3, -1.2, 0.8, 1.9, -0.4, 0.1, -0.9, 1.1, -1.6, 0.5];
        let s = summarize(&base.map(|x| x + 10.0)).unwrap();
        base.iter().map(|x| mean_target + sd_target * (x + 10.0 - s.mean) / s.stddev).collect()
    }

    #[test]
    fn noise_report_reported_figures() {
        let wall = shaped(0.6412, 0.0296);
        let system = vec![0.0098; 10];
        let r = noise_report_from_series(&wall, &system, &NoiseThresholds::default()).unwrap();
        assert!((r.cv - 0.0296 / 0.6412).abs() < 1e-9);
        assert_eq!(r.cv_verdict, CvVerdict::High);
        assert!((r.system_fraction - 0.0098 / 0.6412).abs() < 1e-9);
        assert_eq!(r.system_verdict, SystemVerdict::Ok);

        let flat = noise_report_from_series(&[0.5; 10], &[0.0; 10], &NoiseThresholds::default()).unwrap();
        assert_eq!(flat.cv, 0.0);
        assert_eq!(flat.cv_verdict, CvVerdict::Ok);
        assert!(!flat.has_warnings());
    }

    #[test]
    fn cv_thresholds() {
        let t = NoiseThresholds::default();
        assert_eq!(cv_verdict(0.019, &t), CvVerdict::Ok);
        assert_eq!(cv_verdict(0.02, &t), CvVerdict::Elevated);
        assert_eq!(cv_verdict(0.039, &t), CvVerdict::Elevated);
        assert_eq!(cv_verdict(0.04, &t), CvVerdict::High);
        assert_eq!(system_verdict(0.10, &t), SystemVerdict::Ok);
        assert_eq!(system_verdict(0.11, &t), SystemVerdict::High);
    }

    #[test]
    fn indistinguishable_rule() {
        let quick = Summary::from_reported(622.6, 14.8, 598.6, 647.7, 10);
        let merge = Summary::from_reported(461.5, 5.6, 453.9, 469.2, 10);
        assert!(!indistinguishable(&quick, &merge));
        let a = Summary::from_reported(100.0, 5.0, 90.0, 110.0, 10);
        let b = Summary::from_reported(101.0, 5.0, 90.0, 110.0, 10);
        assert!(indistinguishable(&a, &b));
        let c = Summary::from_reported(104.0, 5.0, 90.0, 110.0, 10);
        assert!(!indistinguishable(&a, &c));
        let same = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert!(indistinguishable(&same, &same));
    }
}
