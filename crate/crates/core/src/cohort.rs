//! Robustness statistics over a cohort of evaluated sequences.
//!
//! Each sequence is evaluated over several randomized runs and reduced to
//! per-metric medians. The cohort is then summarized by cumulative
//! distributions, sorted value lists, a failure-gap estimate per metric, the
//! share of sequences that kept tracking, and Spearman correlations between
//! trajectory attributes and metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numeric;
use crate::trajstats::SequenceStats;
use crate::{Error, Result};

pub const DEFAULT_GAP_RATIO_MIN: f64 = 5.0;
pub const DEFAULT_MIN_TRACKED: f64 = 0.9;
/// Points in the default logarithmic threshold grid.
pub const DEFAULT_GRID_POINTS: usize = 50;

/// Metrics of one run. Metric fields are `None` when the run could not be
/// evaluated (no associated frames, or too few for RPE).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Meters.
    pub ate_rmse: Option<f64>,
    /// Meters.
    pub rpe_trans: Option<f64>,
    /// Radians.
    pub rpe_rot: Option<f64>,
    /// Associated frames over ground-truth frames.
    pub tracked_fraction: f64,
}

impl MetricRecord {
    pub fn failed() -> Self {
        MetricRecord {
            ate_rmse: None,
            rpe_trans: None,
            rpe_rot: None,
            tracked_fraction: 0.0,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Ate => self.ate_rmse,
            Metric::RpeTrans => self.rpe_trans,
            Metric::RpeRot => self.rpe_rot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ate_rmse")]
    Ate,
    #[serde(rename = "rpe_trans")]
    RpeTrans,
    #[serde(rename = "rpe_rot")]
    RpeRot,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ate, Metric::RpeTrans, Metric::RpeRot];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ate => "ate_rmse",
            Metric::RpeTrans => "rpe_trans",
            Metric::RpeRot => "rpe_rot",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Ate | Metric::RpeTrans => "m",
            Metric::RpeRot => "rad",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    #[serde(rename = "mean_vel_per_frame")]
    MeanVel,
    #[serde(rename = "mean_ang_vel_per_frame")]
    MeanAngVel,
    #[serde(rename = "frame_count")]
    FrameCount,
    #[serde(rename = "path_length")]
    PathLength,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::MeanVel,
        Attribute::MeanAngVel,
        Attribute::FrameCount,
        Attribute::PathLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::MeanVel => "mean_vel_per_frame",
            Attribute::MeanAngVel => "mean_ang_vel_per_frame",
            Attribute::FrameCount => "frame_count",
            Attribute::PathLength => "path_length",
        }
    }

    pub fn get(self, s: &SequenceStats) -> f64 {
        match self {
            Attribute::MeanVel => s.mean_vel_per_frame,
            Attribute::MeanAngVel => s.mean_ang_vel_per_frame,
            Attribute::FrameCount => s.frame_count,
            Attribute::PathLength => s.path_length,
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub sequence_id: String,
    pub runs: Vec<MetricRecord>,
    pub median_record: MetricRecord,
    pub stats: SequenceStats,
}

impl SequenceResult {
    pub fn new(sequence_id: impl Into<String>, runs: Vec<MetricRecord>, stats: SequenceStats) -> Result<Self> {
        let median_record = aggregate_runs(&runs)?;
        Ok(SequenceResult {
            sequence_id: sequence_id.into(),
            runs,
            median_record,
            stats,
        })
    }

    /// True when no run produced any associated frame.
    pub fn lost(&self) -> bool {
        self.median_record.ate_rmse.is_none()
    }
}

/// Per-field median over runs; each field is aggregated independently over the
/// runs that have it.
pub fn aggregate_runs(runs: &[MetricRecord]) -> Result<MetricRecord> {
    if runs.is_empty() {
        return Err(Error::validation("cannot aggregate zero runs"));
    }
    let field = |m: Metric| {
        let v: Vec<f64> = runs.iter().filter_map(|r| r.get(m)).collect();
        numeric::median(&v)
    };
    let tracked: Vec<f64> = runs.iter().map(|r| r.tracked_fraction).collect();
    Ok(MetricRecord {
        ate_rmse: field(Metric::Ate),
        rpe_trans: field(Metric::RpeTrans),
        rpe_rot: field(Metric::RpeRot),
        tracked_fraction: numeric::median(&tracked).unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub threshold: f64,
    /// Share of values `<= threshold`.
    pub fraction: f64,
}

pub fn cdf(values: &[f64], thresholds: &[f64]) -> Result<Vec<CdfPoint>> {
    if values.is_empty() {
        return Err(Error::validation("CDF of an empty value list"));
    }
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::validation("CDF thresholds must be ascending"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let count = sorted.partition_point(|v| *v <= threshold);
            CdfPoint {
                threshold,
                fraction: count as f64 / n,
            }
        })
        .collect())
}

/// Logarithmic grid of `points` thresholds from `min/2` to `2·max` over the
/// positive values. A leading `0` is added when some value is zero; an
/// all-zero list yields `[0]`.
pub fn default_thresholds(values: &[f64], points: usize) -> Vec<f64> {
    let positive = values.iter().copied().filter(|v| *v > 0.0);
    let min = positive.clone().fold(f64::INFINITY, f64::min);
    let max = positive.fold(0.0, f64::max);
    let mut grid = Vec::with_capacity(points + 1);
    if values.iter().any(|v| *v <= 0.0) || max == 0.0 {
        grid.push(0.0);
    }
    if max > 0.0 {
        let lo = min / 2.0;
        let hi = 2.0 * max;
        let points = points.max(2);
        let (llo, lhi) = (lo.ln(), hi.ln());
        for k in 0..points {
            let x = if k == 0 {
                lo
            } else if k == points - 1 {
                hi
            } else {
                (llo + (lhi - llo) * k as f64 / (points - 1) as f64).exp()
            };
            grid.push(x);
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Geometric mean of the two values bounding the largest jump.
    pub threshold: f64,
    pub ratio: f64,
}

/// Largest multiplicative jump between consecutive sorted values.
///
/// Returns `None` for fewer than four values or when the largest ratio is
/// below `gap_ratio_min`.
pub fn detect_gap(values: &[f64], gap_ratio_min: f64) -> Result<Option<Gap>> {
    if values.len() < 4 {
        return Ok(None);
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::validation(format!(
            "gap detection needs positive values, found {v}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = sorted
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|a, b| (a.1 / a.0).total_cmp(&(b.1 / b.0)))
        .expect("at least four values");
    let ratio = hi / lo;
    if ratio >= gap_ratio_min {
        Ok(Some(Gap {
            threshold: (lo * hi).sqrt(),
            ratio,
        }))
    } else {
        Ok(None)
    }
}

/// Share of sequences whose median tracked fraction is at least `min_tracked`.
pub fn success_rate(results: &[SequenceResult], min_tracked: f64) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::validation("success rate of an empty cohort"));
    }
    let ok = results
        .iter()
        .filter(|r| r.median_record.tracked_fraction >= min_tracked)
        .count();
    Ok(ok as f64 / results.len() as f64)
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::validation(format!(
            "spearman inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::validation(format!(
            "spearman needs at least 3 samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::validation("spearman input contains NaN"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    // mean rank is (n+1)/2 regardless of ties
    let m = (xs.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - m, b - m);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("one input has zero rank variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub min_tracked: f64,
    pub gap_ratio_min: f64,
    pub grid_points: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            min_tracked: DEFAULT_MIN_TRACKED,
            gap_ratio_min: DEFAULT_GAP_RATIO_MIN,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    /// Sequences with a value for this metric.
    pub included: usize,
    /// Sequences without one (lost tracking).
    pub excluded: usize,
    pub cdf: Vec<CdfPoint>,
    /// Ascending.
    pub sorted_bars: Vec<f64>,
    pub gap: Option<Gap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub attribute: Attribute,
    pub metric: Metric,
    /// `None` when the correlation is undefined (too few samples, constant input).
    pub rho: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    /// Sorted by sequence id.
    pub results: Vec<SequenceResult>,
    pub metrics: Vec<MetricSummary>,
    pub success_rate: f64,
    /// Sequences with no associated frame in any run.
    pub lost_sequences: usize,
    pub correlations: Vec<Correlation>,
}

impl CohortSummary {
    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }

    pub fn correlation(&self, attribute: Attribute, metric: Metric) -> Option<f64> {
        self.correlations
            .iter()
            .find(|c| c.attribute == attribute && c.metric == metric)
            .and_then(|c| c.rho)
    }
}

pub fn summarize(results: &[SequenceResult], options: &SummaryOptions) -> Result<CohortSummary> {
    if results.is_empty() {
        return Err(Error::validation("cannot summarize an empty cohort"));
    }
    let mut results = results.to_vec();
    results.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
    if let Some(w) = results.windows(2).find(|w| w[0].sequence_id == w[1].sequence_id) {
        return Err(Error::validation(format!(
            "duplicate sequence id {:?}",
            w[0].sequence_id
        )));
    }

    let mut metrics = Vec::with_capacity(Metric::ALL.len());
    for metric in Metric::ALL {
        let values: Vec<f64> = results.iter().filter_map(|r| r.median_record.get(metric)).collect();
        let excluded = results.len() - values.len();
        let mut sorted_bars = values.clone();
        sorted_bars.sort_by(f64::total_cmp);
        let (cdf_table, gap) = if values.is_empty() {
            (Vec::new(), None)
        } else {
            let grid = default_thresholds(&values, options.grid_points);
            // a zero metric has no place on a log axis; skip gap detection then
            let gap = if values.iter().all(|v| *v > 0.0) {
                detect_gap(&values, options.gap_ratio_min)?
            } else {
                None
            };
            (cdf(&values, &grid)?, gap)
        };
        metrics.push(MetricSummary {
            metric,
            included: values.len(),
            excluded,
            cdf: cdf_table,
            sorted_bars,
            gap,
        });
    }

    let mut correlations = Vec::new();
    for attribute in Attribute::ALL {
        for metric in Metric::ALL {
            let (xs, ys): (Vec<f64>, Vec<f64>) = results
                .iter()
                .filter_map(|r| r.median_record.get(metric).map(|m| (attribute.get(&r.stats), m)))
                .unzip();
            let rho = spearman(&xs, &ys).ok();
            correlations.push(Correlation {
                attribute,
                metric,
                rho,
                samples: xs.len(),
            });
        }
    }

    Ok(CohortSummary {
        success_rate: success_rate(&results, options.min_tracked)?,
        lost_sequences: results.iter().filter(|r| r.lost()).count(),
        results,
        metrics,
        correlations,
    })
}
