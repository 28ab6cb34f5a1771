//! Report files: JSON summaries, CSV tables and the bundle written by `batch`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use slameval::cohort::{CohortSummary, Metric};
use slameval::metrics::{AteReport, RpeReport};
use slameval::trajstats::SequenceStats;

use crate::batch::{BatchOutcome, Failure};
use crate::manifest::{ManifestOptions, SCHEMA_VERSION};
use crate::svg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub schema_version: u32,
    pub options: ManifestOptions,
    pub evaluated: usize,
    pub cohort_attributes: Option<SequenceStats>,
    pub summary: Option<CohortSummary>,
    pub failures: Vec<Failure>,
}

impl SummaryReport {
    pub fn new(options: ManifestOptions, outcome: BatchOutcome) -> Self {
        SummaryReport {
            schema_version: SCHEMA_VERSION,
            options,
            evaluated: outcome.evaluated(),
            cohort_attributes: outcome.cohort_attributes,
            summary: outcome.summary,
            failures: outcome.failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteFileReport {
    pub schema_version: u32,
    pub gt: String,
    pub est: String,
    pub associated_pairs: usize,
    pub tracked_fraction: f64,
    pub ate: AteReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeFileReport {
    pub schema_version: u32,
    pub gt: String,
    pub est: String,
    pub associated_pairs: usize,
    pub rot_mean_deg: f64,
    pub rpe: RpeReport,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("cannot write {}", path.display()))
}

/// Table columns: dataset, m.vel.p.f, m.ang.v.p.f, m.frames.
pub fn stats_rows(rows: &[(String, SequenceStats)]) -> Vec<[String; 4]> {
    rows.iter()
        .map(|(name, s)| {
            [
                name.clone(),
                format!("{:.4}", s.mean_vel_per_frame),
                format!("{:.3}", s.mean_ang_vel_per_frame),
                format!("{:.1}", s.frame_count),
            ]
        })
        .collect()
}

pub const STATS_HEADER: [&str; 4] = ["dataset", "m.vel.p.f", "m.ang.v.p.f", "m.frames"];

pub fn stats_text(rows: &[(String, SequenceStats)]) -> String {
    let body = stats_rows(rows);
    let mut widths = STATS_HEADER.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 4]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells.iter().zip(widths).skip(1) {
            s.push_str(&format!("  {cell:>w$}"));
        }
        s.push('\n');
        s
    };
    let mut out = line(STATS_HEADER);
    for row in &body {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
    }
    out
}

pub fn stats_csv(rows: &[(String, SequenceStats)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STATS_HEADER)?;
    for (name, s) in rows {
        w.write_record([
            name.clone(),
            s.mean_vel_per_frame.to_string(),
            s.mean_ang_vel_per_frame.to_string(),
            s.frame_count.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `summary.json` plus CSV tables (and SVG charts when asked) into
/// `out_dir`. Returns the written paths in write order.
pub fn write_bundle(out_dir: &Path, report: &SummaryReport, with_svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        Ok(())
    };

    put("summary.json".into(), to_json(report)?)?;

    let failures = report.failures.iter().map(|f| {
        vec![
            f.sequence_id.clone(),
            f.path.clone().unwrap_or_default(),
            f.error.clone(),
        ]
    });
    put(
        "failures.csv".into(),
        csv_string(&["sequence_id", "path", "error"], failures)?,
    )?;

    let Some(summary) = &report.summary else {
        return Ok(written);
    };

    let sequences = summary.results.iter().map(|r| {
        let m = &r.median_record;
        vec![
            r.sequence_id.clone(),
            r.runs.len().to_string(),
            opt(m.ate_rmse),
            opt(m.rpe_trans),
            opt(m.rpe_rot),
            opt(m.rpe_rot.map(f64::to_degrees)),
            m.tracked_fraction.to_string(),
        ]
    });
    put(
        "sequences.csv".into(),
        csv_string(
            &[
                "sequence_id",
                "runs",
                "ate_rmse_m",
                "rpe_trans_m",
                "rpe_rot_rad",
                "rpe_rot_deg",
                "tracked_fraction",
            ],
            sequences,
        )?,
    )?;

    let mut stat_rows: Vec<(String, SequenceStats)> = summary
        .results
        .iter()
        .map(|r| (r.sequence_id.clone(), r.stats.clone()))
        .collect();
    if let Some(c) = &report.cohort_attributes {
        stat_rows.push(("cohort".into(), c.clone()));
    }
    put("stats.csv".into(), stats_csv(&stat_rows)?)?;

    for m in &summary.metrics {
        let name = m.metric.name();
        let deg = m.metric == Metric::RpeRot;
        let mut header = vec!["threshold", "fraction"];
        if deg {
            header.push("threshold_deg");
        }
        let rows = m.cdf.iter().map(|p| {
            let mut row = vec![p.threshold.to_string(), p.fraction.to_string()];
            if deg {
                row.push(p.threshold.to_degrees().to_string());
            }
            row
        });
        put(format!("cdf_{name}.csv"), csv_string(&header, rows)?)?;

        let mut bars: Vec<(&str, f64)> = summary
            .results
            .iter()
            .filter_map(|r| r.median_record.get(m.metric).map(|v| (r.sequence_id.as_str(), v)))
            .collect();
        bars.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
        let mut header = vec!["rank", "sequence_id", "value"];
        if deg {
            header.push("value_deg");
        }
        let rows = bars.iter().enumerate().map(|(i, (id, v))| {
            let mut row = vec![(i + 1).to_string(), id.to_string(), v.to_string()];
            if deg {
                row.push(v.to_degrees().to_string());
            }
            row
        });
        put(format!("bars_{name}.csv"), csv_string(&header, rows)?)?;

        if with_svg {
            put(format!("cdf_{name}.svg"), svg::cdf_chart(m)?)?;
            put(format!("bars_{name}.svg"), svg::bar_chart(m))?;
        }
    }

    let correlations = summary.correlations.iter().map(|c| {
        vec![
            c.attribute.name().to_string(),
            c.metric.name().to_string(),
            opt(c.rho),
            c.samples.to_string(),
        ]
    });
    put(
        "correlations.csv".into(),
        csv_string(&["attribute", "metric", "rho", "samples"], correlations)?,
    )?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(vel: f64, frames: f64) -> SequenceStats {
        SequenceStats {
            mean_vel_per_frame: vel,
            mean_ang_vel_per_frame: 2.39,
            mean_ang_vel_per_frame_rad: 2.39f64.to_radians(),
            frame_count: frames,
            duration: None,
            path_length: vel * (frames - 1.0),
            mean_vel_per_sec: None,
            mean_ang_vel_per_sec: None,
        }
    }

    #[test]
    fn stats_table_columns() {
        let rows = vec![("tum".to_string(), stats(0.009, 1424.0))];
        let text = stats_text(&rows);
        let header: Vec<_> = text.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, STATS_HEADER);
        assert!(text.contains("0.0090") && text.contains("2.390") && text.contains("1424.0"));
        let csv = stats_csv(&rows).unwrap();
        assert!(csv.starts_with("dataset,m.vel.p.f,m.ang.v.p.f,m.frames\n"));
    }

    #[test]
    fn empty_outcome_writes_summary_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        let report = SummaryReport::new(
            ManifestOptions::default(),
            BatchOutcome {
                summary: None,
                cohort_attributes: None,
                failures: vec![Failure {
                    sequence_id: "a,b".into(),
                    path: None,
                    error: "boom".into(),
                }],
            },
        );
        let written = write_bundle(dir.path(), &report, true).unwrap();
        assert_eq!(written.len(), 2);
        let csv = fs::read_to_string(dir.path().join("failures.csv")).unwrap();
        assert!(csv.contains("\"a,b\""));
    }
}
