//! `slameval`: trajectory accuracy and robustness evaluation from the command line.
//!
//! Exit codes: 0 success, 2 bad input (unreadable or malformed files, invalid
//! options), 3 no associated poses between ground truth and estimate.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod batch;
mod manifest;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use slameval::geom3d::{Pose, Rotation, Trajectory};
use slameval::metrics::{ate, rpe, RpeConfig, RpeMode};
use slameval::synth::{perturb, random_trajectory, PerturbationSpec};
use slameval::trajio::{read_tum_file, write_tum_file, DEFAULT_MAX_TIME_DIFF};
use slameval::trajstats::{cohort_stats, resample_stride, sequence_stats};

use crate::batch::{association_for, run_batch};
use crate::manifest::{ManifestOptions, RunManifest, SCHEMA_VERSION};
use crate::report::{write_bundle, write_json, AteFileReport, RpeFileReport, SummaryReport};

#[derive(Parser)]
#[command(
    name = "slameval",
    version,
    about = "SLAM trajectory evaluation: ATE, RPE and cohort robustness reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absolute trajectory error after rigid alignment.
    Ate(PairArgs),
    /// Relative pose error over a fixed frame offset or all pairs.
    Rpe {
        #[command(flatten)]
        pair: PairArgs,
        /// Frame offset between compared poses, in associated frames.
        #[arg(long, default_value_t = 1)]
        delta: usize,
        /// Average over every pair of frames instead of a fixed offset.
        #[arg(long)]
        all_pairs: bool,
        /// Allow all-pairs evaluation beyond 2000 associated frames.
        #[arg(long)]
        no_pair_cap: bool,
    },
    /// Motion attribute table (mean velocity, angular velocity and frames).
    Stats {
        /// TUM trajectory files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Label of the averaged row.
        #[arg(long, default_value = "all")]
        dataset: String,
        /// Keep every n-th frame before computing attributes.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Emit CSV instead of an aligned text table.
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate a manifest of sequences and runs into a report bundle.
    Batch(BatchArgs),
    /// Write a synthetic ground truth and perturbed estimates.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Ground-truth TUM file.
    gt: PathBuf,
    /// Estimated TUM file.
    est: PathBuf,
    /// Timestamp association tolerance in seconds.
    #[arg(long, default_value_t = DEFAULT_MAX_TIME_DIFF)]
    max_diff: f64,
    /// Pair poses by index instead of by timestamp.
    #[arg(long)]
    index_assoc: bool,
    /// Also write a JSON report to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// JSON manifest of sequences and estimate runs.
    manifest: PathBuf,
    /// Output directory for the report bundle.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 1 gives bit-reproducible scheduling.
    #[arg(long, env = "SLAMEVAL_JOBS")]
    jobs: Option<usize>,
    /// Also render SVG charts.
    #[arg(long)]
    svg: bool,
    /// Keep every n-th ground-truth frame (overrides the manifest).
    #[arg(long)]
    stride: Option<usize>,
    /// Timestamp association tolerance in seconds.
    #[arg(long)]
    max_diff: Option<f64>,
    /// RPE frame offset.
    #[arg(long)]
    delta: Option<usize>,
    /// fixed-delta or all-pairs.
    #[arg(long)]
    rpe_mode: Option<RpeMode>,
    /// Tracked fraction counted as success (inclusive).
    #[arg(long)]
    min_tracked: Option<f64>,
    /// Smallest consecutive ratio reported as a failure gap.
    #[arg(long)]
    gap_ratio_min: Option<f64>,
    /// Pair poses by index instead of by timestamp.
    #[arg(long)]
    index_assoc: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving gt.txt and the estimate file(s).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    frames: usize,
    /// Mean step per frame, meters.
    #[arg(long, default_value_t = 0.006)]
    step: f64,
    /// Mean yaw rate magnitude, radians per frame.
    #[arg(long, default_value_t = 0.025)]
    turn_rad: f64,
    /// World-frame drift per frame: x,y,z meters.
    #[arg(long, value_parser = float_list::<3>, allow_hyphen_values = true)]
    drift: Option<[f64; 3]>,
    /// Rotation drift per frame about z, radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    drift_rot_rad: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_trans: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_rot_rad: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    /// Global transform tx,ty,tz,qx,qy,qz,qw applied to estimates.
    #[arg(long, value_parser = float_list::<7>, allow_hyphen_values = true)]
    global: Option<[f64; 7]>,
    /// Number of estimate runs; more than one writes est_0.txt, est_1.txt, ...
    #[arg(long, default_value_t = 1)]
    runs: u64,
}

/// Parses `N` comma-separated numbers.
fn float_list<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<slameval::Error>() {
            Some(slameval::Error::EmptyAssociation { .. }) => 3,
            _ => 2,
        };
        Failure { code, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ate(args) => cmd_ate(&args),
        Command::Rpe {
            pair,
            delta,
            all_pairs,
            no_pair_cap,
        } => cmd_rpe(&pair, delta, all_pairs, no_pair_cap),
        Command::Stats {
            files,
            dataset,
            stride,
            csv,
        } => cmd_stats(&files, &dataset, stride, csv),
        Command::Batch(args) => cmd_batch(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<Trajectory> {
    read_tum_file(path).with_context(|| format!("reading {}", path.display()))
}

fn pair_options(args: &PairArgs) -> ManifestOptions {
    ManifestOptions {
        max_time_diff: args.max_diff,
        index_identity_association: args.index_assoc,
        ..Default::default()
    }
}

fn cmd_ate(args: &PairArgs) -> Result<(), Failure> {
    let gt = read(&args.gt)?;
    let est = read(&args.est)?;
    let assoc = association_for(&gt, &est, &pair_options(args)).map_err(anyhow::Error::from)?;
    let report = ate(&gt, &est, &assoc).map_err(anyhow::Error::from)?;
    let tracked = assoc.len() as f64 / gt.len() as f64;
    println!(
        "associated pairs: {} of {} ground-truth poses ({:.1}%)",
        assoc.len(),
        gt.len(),
        100.0 * tracked
    );
    println!("ATE rmse:   {:.6} m", report.rmse);
    println!("ATE mean:   {:.6} m", report.mean);
    println!("ATE median: {:.6} m", report.median);
    if let Some(path) = &args.report {
        write_json(
            path,
            &AteFileReport {
                schema_version: SCHEMA_VERSION,
                gt: args.gt.display().to_string(),
                est: args.est.display().to_string(),
                associated_pairs: assoc.len(),
                tracked_fraction: tracked,
                ate: report,
            },
        )?;
    }
    Ok(())
}

fn cmd_rpe(args: &PairArgs, delta: usize, all_pairs: bool, no_pair_cap: bool) -> Result<(), Failure> {
    let gt = read(&args.gt)?;
    let est = read(&args.est)?;
    let assoc = association_for(&gt, &est, &pair_options(args)).map_err(anyhow::Error::from)?;
    let mut config = if all_pairs {
        RpeConfig::all_pairs()
    } else {
        RpeConfig::fixed(delta)
    };
    if no_pair_cap {
        config.all_pairs_cap = None;
    }
    let report = rpe(&gt, &est, &assoc, &config).map_err(anyhow::Error::from)?;
    match report.delta {
        Some(d) => println!("RPE over delta = {d} frames, {} pairs", report.per_pair_trans.len()),
        None => println!("RPE over all {} frame pairs", report.per_pair_trans.len()),
    }
    println!("RPE trans rmse: {:.6} m", report.trans_rmse);
    println!(
        "RPE rot mean:   {:.6} deg ({:.6} rad)",
        report.rot_mean.to_degrees(),
        report.rot_mean
    );
    if let Some(path) = &args.report {
        write_json(
            path,
            &RpeFileReport {
                schema_version: SCHEMA_VERSION,
                gt: args.gt.display().to_string(),
                est: args.est.display().to_string(),
                associated_pairs: assoc.len(),
                rot_mean_deg: report.rot_mean.to_degrees(),
                rpe: report,
            },
        )?;
    }
    Ok(())
}

fn cmd_stats(files: &[PathBuf], dataset: &str, stride: usize, csv: bool) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for path in files {
        let t = resample_stride(&read(path)?, stride).map_err(anyhow::Error::from)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        rows.push((name, sequence_stats(&t)));
    }
    let stats: Vec<_> = rows.iter().map(|(_, s)| s.clone()).collect();
    let averaged = cohort_stats(&stats).map_err(anyhow::Error::from)?;
    if rows.len() > 1 {
        rows.push((dataset.to_string(), averaged));
    } else {
        rows[0].0 = dataset.to_string();
    }
    if csv {
        print!("{}", report::stats_csv(&rows)?);
    } else {
        print!("{}", report::stats_text(&rows));
    }
    Ok(())
}

fn cmd_batch(args: &BatchArgs) -> Result<(), Failure> {
    let mut manifest = RunManifest::load(&args.manifest)?;
    let o = &mut manifest.options;
    if let Some(v) = args.stride {
        o.stride = v;
    }
    if let Some(v) = args.max_diff {
        o.max_time_diff = v;
    }
    if let Some(v) = args.delta {
        o.rpe_delta = v;
    }
    if let Some(v) = args.rpe_mode {
        o.rpe_mode = v;
    }
    if let Some(v) = args.min_tracked {
        o.min_tracked = v;
    }
    if let Some(v) = args.gap_ratio_min {
        o.gap_ratio_min = v;
    }
    if args.index_assoc {
        o.index_identity_association = true;
    }
    o.validate()?;

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(anyhow::anyhow!("--jobs must be at least 1").into());
    }
    let outcome = run_batch(&manifest, jobs)?;
    for f in &outcome.failures {
        match &f.path {
            Some(p) => eprintln!("failed: {} ({}): {}", f.sequence_id, p, f.error),
            None => eprintln!("failed: {}: {}", f.sequence_id, f.error),
        }
    }
    let report = SummaryReport::new(manifest.options.clone(), outcome);
    write_bundle(&args.out, &report, args.svg)?;

    let Some(summary) = &report.summary else {
        return Err(anyhow::anyhow!("no sequence could be evaluated").into());
    };
    println!(
        "evaluated {} sequences ({} lost, {} failures); success rate {:.1}%",
        report.evaluated,
        summary.lost_sequences,
        report.failures.len(),
        100.0 * summary.success_rate
    );
    for m in &summary.metrics {
        match m.gap {
            Some(g) => println!("{}: gap at {:.4e} (ratio {:.1})", m.metric, g.threshold, g.ratio),
            None => println!("{}: no gap", m.metric),
        }
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let gt = random_trajectory(args.seed, args.frames, args.step, args.turn_rad).map_err(anyhow::Error::from)?;
    let global = match &args.global {
        Some(v) => {
            let rotation = Rotation::from_wxyz(v[6], v[3], v[4], v[5]).map_err(anyhow::Error::from)?;
            Some(Pose::new(rotation, Vector3::new(v[0], v[1], v[2])))
        }
        None => None,
    };
    let drift = args.drift.unwrap_or([0.0; 3]);
    if args.runs == 0 {
        return Err(anyhow::anyhow!("--runs must be at least 1").into());
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let gt_path = args.out_dir.join("gt.txt");
    write_tum_file(&gt, &gt_path).map_err(anyhow::Error::from)?;
    println!("{}", gt_path.display());
    for run in 0..args.runs {
        let spec = PerturbationSpec {
            global_transform: global,
            drift_per_frame: drift,
            drift_rot_per_frame: args.drift_rot_rad,
            noise_sigma_trans: args.noise_trans,
            noise_sigma_rot: args.noise_rot_rad,
            dropout_fraction: args.dropout,
            seed: args.seed.wrapping_add(1 + run),
            ..Default::default()
        };
        let est = perturb(&gt, &spec).map_err(anyhow::Error::from)?;
        let name = if args.runs == 1 {
            "est.txt".to_string()
        } else {
            format!("est_{run}.txt")
        };
        let path = args.out_dir.join(name);
        write_tum_file(&est, &path).map_err(anyhow::Error::from)?;
        println!("{}", path.display());
    }
    Ok(())
}
