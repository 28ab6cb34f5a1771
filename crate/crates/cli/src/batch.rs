//! Evaluation of a manifest: every run of every sequence, then cohort reduction.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use slameval::cohort::{summarize, CohortSummary, MetricRecord, SequenceResult, SummaryOptions};
use slameval::geom3d::Trajectory;
use slameval::metrics::{ate, rpe, AteReport, RpeConfig, RpeReport};
use slameval::trajio::{associate, associate_by_index, read_tum_file, Association};
use slameval::trajstats::{cohort_stats, resample_stride, sequence_stats, SequenceStats};

use crate::manifest::{ManifestEntry, ManifestOptions, RunManifest};

/// A file or sequence that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sequence_id: String,
    pub path: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub summary: Option<CohortSummary>,
    /// Averages of the per-sequence attributes over evaluated sequences.
    pub cohort_attributes: Option<SequenceStats>,
    pub failures: Vec<Failure>,
}

impl BatchOutcome {
    pub fn evaluated(&self) -> usize {
        self.summary.as_ref().map_or(0, |s| s.results.len())
    }
}

pub fn association_for(gt: &Trajectory, est: &Trajectory, options: &ManifestOptions) -> slameval::Result<Association> {
    if options.index_identity_association {
        let assoc = associate_by_index(gt, est);
        if assoc.is_empty() {
            return Err(slameval::Error::EmptyAssociation { max_time_diff: 0.0 });
        }
        Ok(assoc)
    } else {
        associate(gt, est, options.max_time_diff)
    }
}

pub fn rpe_config(options: &ManifestOptions) -> RpeConfig {
    RpeConfig {
        delta: options.rpe_delta,
        mode: options.rpe_mode,
        ..Default::default()
    }
}

/// Metrics of one estimate against (already resampled) ground truth. RPE is
/// left out when too few pairs are associated for the configured offset.
pub fn evaluate_run(
    gt: &Trajectory,
    est: &Trajectory,
    options: &ManifestOptions,
) -> slameval::Result<(Association, AteReport, Option<RpeReport>)> {
    let assoc = association_for(gt, est, options)?;
    let ate = ate(gt, est, &assoc)?;
    let rpe = rpe(gt, est, &assoc, &rpe_config(options)).ok();
    Ok((assoc, ate, rpe))
}

fn record_for(gt: &Trajectory, est: &Trajectory, options: &ManifestOptions) -> slameval::Result<MetricRecord> {
    match evaluate_run(gt, est, options) {
        Ok((assoc, ate, rpe)) => Ok(MetricRecord {
            ate_rmse: Some(ate.rmse),
            rpe_trans: rpe.as_ref().map(|r| r.trans_rmse),
            rpe_rot: rpe.as_ref().map(|r| r.rot_mean),
            tracked_fraction: assoc.len() as f64 / gt.len() as f64,
        }),
        Err(slameval::Error::EmptyAssociation { .. }) => Ok(MetricRecord::failed()),
        Err(e) => Err(e),
    }
}

fn evaluate_sequence(entry: &ManifestEntry, options: &ManifestOptions) -> (Option<SequenceResult>, Vec<Failure>) {
    let fail = |path: &Path, error: String| Failure {
        sequence_id: entry.sequence_id.clone(),
        path: Some(path.display().to_string()),
        error,
    };
    let mut failures = Vec::new();
    let full_gt = match read_tum_file(&entry.gt_path) {
        Ok(t) => t,
        Err(e) => return (None, vec![fail(&entry.gt_path, e.to_string())]),
    };
    let gt = match resample_stride(&full_gt, options.stride) {
        Ok(t) => t,
        Err(e) => return (None, vec![fail(&entry.gt_path, e.to_string())]),
    };

    let mut runs = Vec::with_capacity(entry.estimate_paths.len());
    for path in &entry.estimate_paths {
        let est = match read_tum_file(path) {
            Ok(t) => t,
            Err(e) => {
                failures.push(fail(path, e.to_string()));
                continue;
            }
        };
        // estimates produced on the full-rate sequence follow the ground-truth stride
        let est = if options.index_identity_association && options.stride > 1 && est.len() == full_gt.len() {
            match resample_stride(&est, options.stride) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(fail(path, e.to_string()));
                    continue;
                }
            }
        } else {
            est
        };
        match record_for(&gt, &est, options) {
            Ok(r) => runs.push(r),
            Err(e) => failures.push(fail(path, e.to_string())),
        }
    }

    if runs.is_empty() {
        failures.push(Failure {
            sequence_id: entry.sequence_id.clone(),
            path: None,
            error: "no estimate run could be evaluated".into(),
        });
        return (None, failures);
    }
    match SequenceResult::new(entry.sequence_id.clone(), runs, sequence_stats(&gt)) {
        Ok(r) => (Some(r), failures),
        Err(e) => {
            failures.push(Failure {
                sequence_id: entry.sequence_id.clone(),
                path: None,
                error: e.to_string(),
            });
            (None, failures)
        }
    }
}

/// Evaluates every sequence on a pool of `jobs` threads. Results are reduced
/// in sequence-id order, so the outcome does not depend on `jobs`.
pub fn run_batch(manifest: &RunManifest, jobs: usize) -> anyhow::Result<BatchOutcome> {
    let options = &manifest.options;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let evaluated: Vec<_> = pool.install(|| {
        manifest
            .sequences
            .par_iter()
            .map(|entry| evaluate_sequence(entry, options))
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (result, f) in evaluated {
        results.extend(result);
        failures.extend(f);
    }
    results.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
    failures.sort_by(|a, b| (&a.sequence_id, &a.path).cmp(&(&b.sequence_id, &b.path)));

    if results.is_empty() {
        return Ok(BatchOutcome {
            summary: None,
            cohort_attributes: None,
            failures,
        });
    }
    let summary_options = SummaryOptions {
        min_tracked: options.min_tracked,
        gap_ratio_min: options.gap_ratio_min,
        ..Default::default()
    };
    let summary = summarize(&results, &summary_options)?;
    let stats: Vec<_> = summary.results.iter().map(|r| r.stats.clone()).collect();
    Ok(BatchOutcome {
        cohort_attributes: Some(cohort_stats(&stats)?),
        summary: Some(summary),
        failures,
    })
}
