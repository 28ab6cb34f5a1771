//! Absolute trajectory error and relative pose error.
//!
//! With `P_i` the estimated poses, `Q_i` the ground-truth poses and `S` the
//! rigid alignment of the estimated onto the ground-truth positions:
//!
//! * ATE error matrices `E_i = Q_i⁻¹ S P_i`, reduced to the RMSE of
//!   `||trans(E_i)||`.
//! * RPE error matrices `F_i = (Q_i⁻¹ Q_{i+Δ})⁻¹ (P_i⁻¹ P_{i+Δ})`, reduced to
//!   the RMSE of `||trans(F_i)||` and the mean of `∠rot(F_i)`.
//!
//! Indices run over associated pairs in ground-truth order, so Δ counts
//! associated frames.

use serde::{Deserialize, Serialize};

use crate::align::{horn_align, AlignmentResult};
use crate::geom3d::{Pose, Trajectory};
use crate::numeric;
use crate::trajio::Association;
use crate::{Error, Result};

/// Largest associated-pair count accepted by all-pairs RPE unless overridden.
pub const DEFAULT_ALL_PAIRS_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteReport {
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    /// `||trans(E_i)||` per associated pair, meters.
    pub per_frame: Vec<f64>,
    pub alignment: AlignmentResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpeMode {
    FixedDelta,
    AllPairs,
}

impl std::str::FromStr for RpeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-delta" | "fixed" => Ok(RpeMode::FixedDelta),
            "all-pairs" | "all" => Ok(RpeMode::AllPairs),
            _ => Err(Error::validation(format!("unknown RPE mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpeConfig {
    pub delta: usize,
    pub mode: RpeMode,
    /// Maximum associated-pair count for all-pairs mode; `None` disables the cap.
    pub all_pairs_cap: Option<usize>,
}

impl Default for RpeConfig {
    fn default() -> Self {
        RpeConfig {
            delta: 1,
            mode: RpeMode::FixedDelta,
            all_pairs_cap: Some(DEFAULT_ALL_PAIRS_CAP),
        }
    }
}

impl RpeConfig {
    pub fn fixed(delta: usize) -> Self {
        RpeConfig {
            delta,
            ..Default::default()
        }
    }

    pub fn all_pairs() -> Self {
        RpeConfig {
            mode: RpeMode::AllPairs,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeReport {
    /// Frame offset Δ; `None` in all-pairs mode.
    pub delta: Option<usize>,
    pub mode: RpeMode,
    pub trans_rmse: f64,
    /// Radians.
    pub rot_mean: f64,
    pub per_pair_trans: Vec<f64>,
    pub per_pair_rot: Vec<f64>,
}

fn paired_poses<'a>(gt: &'a Trajectory, est: &'a Trajectory, assoc: &Association) -> Result<Vec<(&'a Pose, &'a Pose)>> {
    assoc
        .pairs
        .iter()
        .map(|&(i, j)| match (gt.poses().get(i), est.poses().get(j)) {
            (Some(q), Some(p)) => Ok((q, p)),
            _ => Err(Error::validation(format!(
                "association pair ({i}, {j}) out of range for trajectories of length {} and {}",
                gt.len(),
                est.len()
            ))),
        })
        .collect()
}

pub fn ate(gt: &Trajectory, est: &Trajectory, assoc: &Association) -> Result<AteReport> {
    if assoc.is_empty() {
        return Err(Error::validation("ATE needs at least one associated pair"));
    }
    let pairs = paired_poses(gt, est, assoc)?;
    let gt_points: Vec<_> = pairs.iter().map(|(q, _)| q.trans()).collect();
    let est_points: Vec<_> = pairs.iter().map(|(_, p)| p.trans()).collect();
    let alignment = horn_align(&gt_points, &est_points)?;
    let s = alignment.transform;

    let per_frame: Vec<f64> = pairs
        .iter()
        .map(|(q, p)| q.inverse().compose(&s.compose(p)).trans().norm())
        .collect();
    Ok(AteReport {
        rmse: numeric::rmse(&per_frame).unwrap_or(0.0),
        mean: numeric::mean(&per_frame).unwrap_or(0.0),
        median: numeric::median(&per_frame).unwrap_or(0.0),
        per_frame,
        alignment,
    })
}

/// `F = (Q_a⁻¹ Q_b)⁻¹ (P_a⁻¹ P_b)`.
fn rpe_error(q_a: &Pose, q_b: &Pose, p_a: &Pose, p_b: &Pose) -> Pose {
    q_a.relative(q_b).relative(&p_a.relative(p_b))
}

pub fn rpe(gt: &Trajectory, est: &Trajectory, assoc: &Association, config: &RpeConfig) -> Result<RpeReport> {
    let pairs = paired_poses(gt, est, assoc)?;
    let n = pairs.len();
    if n < 2 {
        return Err(Error::validation(format!(
            "RPE needs at least 2 associated pairs, got {n}"
        )));
    }

    let mut per_pair_trans = Vec::new();
    let mut per_pair_rot = Vec::new();
    let mut push = |a: usize, b: usize| {
        let f = rpe_error(pairs[a].0, pairs[b].0, pairs[a].1, pairs[b].1);
        per_pair_trans.push(f.trans().norm());
        per_pair_rot.push(f.rot().angle());
    };

    let delta = match config.mode {
        RpeMode::FixedDelta => {
            let delta = config.delta;
            if delta < 1 || delta >= n {
                return Err(Error::validation(format!(
                    "delta {delta} out of range [1, {}] for {n} associated pairs",
                    n - 1
                )));
            }
            for i in 0..n - delta {
                push(i, i + delta);
            }
            Some(delta)
        }
        RpeMode::AllPairs => {
            if let Some(cap) = config.all_pairs_cap {
                if n > cap {
                    return Err(Error::validation(format!(
                        "all-pairs RPE over {n} pairs exceeds the cap of {cap}; raise or disable the cap"
                    )));
                }
            }
            for delta in 1..n {
                for i in 0..n - delta {
                    push(i, i + delta);
                }
            }
            None
        }
    };

    Ok(RpeReport {
        delta,
        mode: config.mode,
        trans_rmse: numeric::rmse(&per_pair_trans).unwrap_or(0.0),
        rot_mean: numeric::mean(&per_pair_rot).unwrap_or(0.0),
        per_pair_trans,
        per_pair_rot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom3d::Rotation;
    use crate::trajio::associate_by_index;
    use nalgebra::Vector3;

    fn traj(poses: Vec<Pose>) -> Trajectory {
        let poses = poses
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.with_timestamp(i as f64 / 30.0))
            .collect();
        Trajectory::new("t", poses).unwrap()
    }

    fn wiggly(n: usize) -> Trajectory {
        traj(
            (0..n)
                .map(|i| {
                    let s = i as f64;
                    Pose::new(
                        Rotation::from_axis_angle(&Vector3::new(0.2, 1.0, 0.1 * s), 0.05 * s),
                        Vector3::new(0.1 * s, (0.3 * s).sin(), 0.01 * s * s),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn ate_of_identical_trajectories_is_zero() {
        let gt = wiggly(20);
        let r = ate(&gt, &gt, &associate_by_index(&gt, &gt)).unwrap();
        assert!(r.rmse <= 1e-12 && r.mean <= 1e-12 && r.median <= 1e-12);
        assert_eq!(r.per_frame.len(), 20);
    }

    #[test]
    fn ate_absorbs_global_transform() {
        let gt = wiggly(30);
        let g = Pose::new(
            Rotation::from_axis_angle(&Vector3::new(1.0, -1.0, 0.5), 2.0),
            Vector3::new(3.0, -1.0, 2.0),
        );
        let est = gt.transformed(&g);
        let r = ate(&gt, &est, &associate_by_index(&gt, &est)).unwrap();
        assert!(r.rmse <= 1e-9, "{}", r.rmse);
    }

    #[test]
    fn ate_definitional_identities() {
        let gt = wiggly(25);
        let est = traj(
            gt.iter()
                .enumerate()
                .map(|(i, p)| {
                    Pose::from_translation(Vector3::new(0.0, 0.01 * (i % 3) as f64, 0.002 * i as f64)).compose(p)
                })
                .collect(),
        );
        let r = ate(&gt, &est, &associate_by_index(&gt, &est)).unwrap();
        let ms: f64 = r.per_frame.iter().map(|v| v * v).sum::<f64>() / r.per_frame.len() as f64;
        assert!((r.rmse * r.rmse - ms).abs() <= 1e-12);
        assert!(r.rmse > 0.0);
    }

    #[test]
    fn ate_empty_association_is_error() {
        let gt = wiggly(3);
        let empty = Association {
            pairs: vec![],
            max_time_diff: Some(0.02),
        };
        assert!(ate(&gt, &gt, &empty).is_err());
    }

    #[test]
    fn rpe_of_identical_trajectories_is_zero() {
        let gt = wiggly(10);
        let r = rpe(&gt, &gt, &associate_by_index(&gt, &gt), &RpeConfig::fixed(1)).unwrap();
        assert!(r.trans_rmse <= 1e-12 && r.rot_mean <= 1e-12);
        assert_eq!(r.per_pair_trans.len(), 9);
    }

    #[test]
    fn rpe_translation_drift() {
        let gt = traj(vec![Pose::identity(); 12]);
        let est = traj(
            (0..12)
                .map(|i| Pose::from_translation(Vector3::new(0.01 * i as f64, 0.0, 0.0)))
                .collect(),
        );
        let assoc = associate_by_index(&gt, &est);
        let r = rpe(&gt, &est, &assoc, &RpeConfig::fixed(3)).unwrap();
        assert!((r.trans_rmse - 0.03).abs() <= 1e-12);
        assert_eq!(r.per_pair_trans.len(), 12 - 3);
        assert_eq!(r.delta, Some(3));
    }

    #[test]
    fn rpe_rotation_drift() {
        let phi = 0.02;
        let gt = traj(vec![Pose::identity(); 10]);
        let est = traj(
            (0..10)
                .map(|i| Pose::new(Rotation::rz(i as f64 * phi), Vector3::zeros()))
                .collect(),
        );
        let r = rpe(&gt, &est, &associate_by_index(&gt, &est), &RpeConfig::fixed(1)).unwrap();
        assert!((r.rot_mean - phi).abs() <= 1e-12);
    }

    #[test]
    fn rpe_range_errors() {
        let gt = wiggly(5);
        let assoc = associate_by_index(&gt, &gt);
        assert!(rpe(&gt, &gt, &assoc, &RpeConfig::fixed(0)).is_err());
        assert!(rpe(&gt, &gt, &assoc, &RpeConfig::fixed(5)).is_err());
        assert!(rpe(&gt, &gt, &assoc, &RpeConfig::fixed(4)).is_ok());
        let one = Association {
            pairs: vec![(0, 0)],
            max_time_diff: None,
        };
        assert!(rpe(&gt, &gt, &one, &RpeConfig::fixed(1)).is_err());
    }

    #[test]
    fn all_pairs_count_and_cap() {
        let gt = wiggly(8);
        let assoc = associate_by_index(&gt, &gt);
        let r = rpe(&gt, &gt, &assoc, &RpeConfig::all_pairs()).unwrap();
        assert_eq!(r.per_pair_trans.len(), 8 * 7 / 2);
        assert_eq!(r.delta, None);
        let capped = RpeConfig {
            all_pairs_cap: Some(5),
            ..RpeConfig::all_pairs()
        };
        assert!(rpe(&gt, &gt, &assoc, &capped).is_err());
        let uncapped = RpeConfig {
            all_pairs_cap: None,
            ..RpeConfig::all_pairs()
        };
        assert!(rpe(&gt, &gt, &assoc, &uncapped).is_ok());
    }

    #[test]
    fn out_of_range_association_is_rejected() {
        let gt = wiggly(3);
        let bad = Association {
            pairs: vec![(0, 0), (5, 1)],
            max_time_diff: None,
        };
        assert!(ate(&gt, &gt, &bad).is_err());
    }
}
