//! Batch manifest: which ground-truth files and which estimate runs to evaluate.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "options": { "rpe_delta": 1, "min_tracked": 0.9 },
//!   "sequences": [
//!     { "sequence_id": "fr1_xyz", "gt_path": "fr1_xyz/gt.txt",
//!       "estimate_paths": ["fr1_xyz/run0.txt", "fr1_xyz/run1.txt"] }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Every option is
//! optional.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use slameval::cohort::{DEFAULT_GAP_RATIO_MIN, DEFAULT_MIN_TRACKED};
use slameval::metrics::RpeMode;
use slameval::trajio::DEFAULT_MAX_TIME_DIFF;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    #[serde(default)]
    pub options: ManifestOptions,
    pub sequences: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub sequence_id: String,
    pub gt_path: PathBuf,
    pub estimate_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestOptions {
    pub max_time_diff: f64,
    pub rpe_delta: usize,
    pub rpe_mode: RpeMode,
    pub min_tracked: f64,
    pub gap_ratio_min: f64,
    pub index_identity_association: bool,
    /// Keep every `stride`-th ground-truth frame before evaluation.
    pub stride: usize,
}

impl Default for ManifestOptions {
    fn default() -> Self {
        ManifestOptions {
            max_time_diff: DEFAULT_MAX_TIME_DIFF,
            rpe_delta: 1,
            rpe_mode: RpeMode::FixedDelta,
            min_tracked: DEFAULT_MIN_TRACKED,
            gap_ratio_min: DEFAULT_GAP_RATIO_MIN,
            index_identity_association: false,
            stride: 1,
        }
    }
}

impl ManifestOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_time_diff >= 0.0) {
            bail!("max_time_diff must be non-negative");
        }
        if self.rpe_delta == 0 {
            bail!("rpe_delta must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.min_tracked) {
            bail!("min_tracked must lie in [0, 1]");
        }
        if !(self.gap_ratio_min > 1.0) {
            bail!("gap_ratio_min must exceed 1");
        }
        if self.stride == 0 {
            bail!("stride must be at least 1");
        }
        Ok(())
    }
}

impl RunManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_str(text).context("invalid manifest JSON")?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Reads a manifest and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let mut manifest = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in &mut manifest.sequences {
            entry.gt_path = resolve(base, &entry.gt_path);
            for p in &mut entry.estimate_paths {
                *p = resolve(base, p);
            }
        }
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported manifest schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if self.sequences.is_empty() {
            bail!("manifest lists no sequences");
        }
        let mut seen = HashSet::new();
        for entry in &self.sequences {
            if !seen.insert(entry.sequence_id.as_str()) {
                bail!("duplicate sequence_id {:?}", entry.sequence_id);
            }
            if entry.estimate_paths.is_empty() {
                bail!("sequence {:?} has no estimate paths", entry.sequence_id);
            }
        }
        self.options.validate()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
