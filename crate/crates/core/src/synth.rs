//! Synthetic ground-truth trajectories and controlled perturbations.
//!
//! Ground truth follows a ground-robot motion profile: a camera at fixed height
//! moving on a horizontal plane with a constant per-frame step and a smoothly
//! varying yaw rate, facing the direction of motion. Estimates are derived from
//! ground truth by a global rigid transform, linear drift, Gaussian noise and
//! frame dropout, so metric values can be predicted analytically.
//!
//! All randomness comes from a ChaCha generator seeded from the caller's seed;
//! independent stages draw from separate streams of that generator.

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::geom3d::{Pose, Rotation, Trajectory};
use crate::{Error, Result};

pub const FRAME_RATE_HZ: f64 = 30.0;
/// Camera height above the floor, meters.
pub const CAMERA_HEIGHT: f64 = 0.8;

const STREAM_PATH: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Planar path with constant step `step_mean` (meters/frame) and a yaw rate
/// whose mean magnitude is about `turn_mean` (radians/frame). The yaw rate
/// blends linearly between random targets held over 30–120 frame segments.
///
/// Positions scale linearly with `step_mean` for a fixed seed and `turn_mean`.
pub fn random_trajectory(seed: u64, n: usize, step_mean: f64, turn_mean: f64) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::validation(format!("synthetic trajectory needs n >= 2, got {n}")));
    }
    if !(step_mean >= 0.0) || !(turn_mean >= 0.0) {
        return Err(Error::validation("step_mean and turn_mean must be non-negative"));
    }
    let mut rng = rng_for(seed, STREAM_PATH);
    let mut heading: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);

    // uniform on [-2m, 2m] has mean magnitude m
    let draw_rate = |rng: &mut ChaCha8Rng| {
        if turn_mean > 0.0 {
            rng.random_range(-2.0 * turn_mean..=2.0 * turn_mean)
        } else {
            0.0
        }
    };
    let mut rate_from = draw_rate(&mut rng);
    let mut rate_to = draw_rate(&mut rng);
    let mut seg_len: usize = rng.random_range(30..=120);
    let mut seg_pos = 0usize;

    let mut position = Vector3::new(0.0, 0.0, CAMERA_HEIGHT);
    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        poses.push(Pose::new(Rotation::rz(heading), position).with_timestamp(i as f64 / FRAME_RATE_HZ));
        let s = seg_pos as f64 / seg_len as f64;
        let rate = rate_from + (rate_to - rate_from) * s;
        // midpoint heading keeps the chord length close to the step on curves
        let mid = heading + 0.5 * rate;
        position += step_mean * Vector3::new(mid.cos(), mid.sin(), 0.0);
        heading += rate;
        seg_pos += 1;
        if seg_pos == seg_len {
            seg_pos = 0;
            rate_from = rate_to;
            rate_to = draw_rate(&mut rng);
            seg_len = rng.random_range(30..=120);
        }
    }
    Trajectory::new(format!("synth-{seed}"), poses)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Left-composed onto every pose.
    pub global_transform: Option<Pose>,
    /// World-frame translation added per frame index, meters.
    pub drift_per_frame: [f64; 3],
    /// Rotation added per frame index about `drift_axis`, radians.
    pub drift_rot_per_frame: f64,
    pub drift_axis: [f64; 3],
    /// Per-axis translation noise, meters.
    pub noise_sigma_trans: f64,
    /// Rotation noise angle about a random axis, radians.
    pub noise_sigma_rot: f64,
    /// Share of frames removed, in `[0, 1)`.
    pub dropout_fraction: f64,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            global_transform: None,
            drift_per_frame: [0.0; 3],
            drift_rot_per_frame: 0.0,
            drift_axis: [0.0, 0.0, 1.0],
            noise_sigma_trans: 0.0,
            noise_sigma_rot: 0.0,
            dropout_fraction: 0.0,
            seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma_trans >= 0.0) || !(self.noise_sigma_rot >= 0.0) {
            return Err(Error::validation("noise sigmas must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_fraction) {
            return Err(Error::validation(format!(
                "dropout fraction {} outside [0, 1)",
                self.dropout_fraction
            )));
        }
        let finite = self
            .drift_per_frame
            .iter()
            .chain(&self.drift_axis)
            .chain([&self.drift_rot_per_frame])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("drift parameters must be finite"));
        }
        if self.drift_rot_per_frame != 0.0 && Vector3::from(self.drift_axis).norm() == 0.0 {
            return Err(Error::validation("rotation drift needs a non-zero axis"));
        }
        Ok(())
    }
}

/// Applies, in order: global transform, drift, noise, dropout. Timestamps of
/// surviving frames are preserved.
pub fn perturb(gt: &Trajectory, spec: &PerturbationSpec) -> Result<Trajectory> {
    spec.validate()?;
    let drift = Vector3::from(spec.drift_per_frame);
    let axis = Vector3::from(spec.drift_axis);
    let normal = |sigma: f64| Normal::new(0.0, sigma).map_err(|e| Error::validation(e.to_string()));
    let trans_noise = normal(spec.noise_sigma_trans)?;
    let rot_noise = normal(spec.noise_sigma_rot)?;
    let mut rng = rng_for(spec.seed, STREAM_NOISE);

    let mut poses: Vec<Pose> = gt
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut pose = match &spec.global_transform {
                Some(g) => Pose {
                    timestamp: p.timestamp,
                    ..g.compose(p)
                },
                None => *p,
            };
            let k = i as f64;
            if drift != Vector3::zeros() {
                pose.translation += k * drift;
            }
            if spec.drift_rot_per_frame != 0.0 {
                pose.rotation = Rotation::from_axis_angle(&axis, k * spec.drift_rot_per_frame).compose(&pose.rotation);
            }
            if spec.noise_sigma_trans > 0.0 {
                pose.translation += Vector3::from_fn(|_, _| trans_noise.sample(&mut rng));
            }
            if spec.noise_sigma_rot > 0.0 {
                let dir: [f64; 3] = UnitSphere.sample(&mut rng);
                let angle = rot_noise.sample(&mut rng);
                pose.rotation = Rotation::from_axis_angle(&Vector3::from(dir), angle).compose(&pose.rotation);
            }
            pose
        })
        .collect();

    if spec.dropout_fraction > 0.0 {
        let n = poses.len();
        let keep = ((n as f64 * (1.0 - spec.dropout_fraction)).ceil() as usize).clamp(1, n);
        let mut kept = sample(&mut rng_for(spec.seed, STREAM_DROPOUT), n, keep).into_vec();
        kept.sort_unstable();
        poses = kept.into_iter().map(|i| poses[i]).collect();
    }
    Trajectory::new(gt.id(), poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ate, rpe, RpeConfig};
    use crate::trajio::{associate, associate_by_index, DEFAULT_MAX_TIME_DIFF};
    use crate::trajstats::sequence_stats;

    #[test]
    fn deterministic() {
        let a = random_trajectory(7, 300, 0.01, 0.02).unwrap();
        let b = random_trajectory(7, 300, 0.01, 0.02).unwrap();
        assert_eq!(a, b);
        let c = random_trajectory(8, 300, 0.01, 0.02).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn step_scale() {
        let t = random_trajectory(3, 1000, 0.006, 1.5f64.to_radians()).unwrap();
        let s = sequence_stats(&t);
        assert!(
            (0.0054..=0.0066).contains(&s.mean_vel_per_frame),
            "{}",
            s.mean_vel_per_frame
        );
        assert!(t.iter().all(|p| (p.translation.z - CAMERA_HEIGHT).abs() < 1e-12));
    }

    #[test]
    fn straight_when_not_turning() {
        let t = random_trajectory(3, 100, 0.01, 0.0).unwrap();
        let s = sequence_stats(&t);
        assert_eq!(s.mean_ang_vel_per_frame, 0.0);
        assert!((s.mean_vel_per_frame - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_short() {
        assert!(random_trajectory(0, 1, 0.01, 0.0).is_err());
    }

    #[test]
    fn empty_spec_is_identity() {
        let gt = random_trajectory(1, 50, 0.01, 0.03).unwrap();
        assert_eq!(perturb(&gt, &PerturbationSpec::default()).unwrap(), gt);
    }

    #[test]
    fn drift_oracle() {
        let gt = Trajectory::new(
            "static",
            (0..20)
                .map(|i| Pose::identity().with_timestamp(i as f64 / 30.0))
                .collect(),
        )
        .unwrap();
        let spec = PerturbationSpec {
            drift_per_frame: [0.01, 0.0, 0.0],
            ..Default::default()
        };
        let est = perturb(&gt, &spec).unwrap();
        let assoc = associate(&gt, &est, DEFAULT_MAX_TIME_DIFF).unwrap();
        let r = rpe(&gt, &est, &assoc, &RpeConfig::fixed(1)).unwrap();
        assert!((r.trans_rmse - 0.01).abs() <= 1e-12);
        assert!(ate(&gt, &est, &assoc).unwrap().rmse > 0.0);
    }

    #[test]
    fn global_transform_only() {
        let gt = random_trajectory(5, 200, 0.01, 0.03).unwrap();
        let spec = PerturbationSpec {
            global_transform: Some(Pose::new(Rotation::rz(0.7), Vector3::new(1.0, -2.0, 0.3))),
            ..Default::default()
        };
        let est = perturb(&gt, &spec).unwrap();
        let assoc = associate_by_index(&gt, &est);
        assert!(ate(&gt, &est, &assoc).unwrap().rmse <= 1e-9);
        let a = rpe(&gt, &gt, &assoc, &RpeConfig::fixed(1)).unwrap();
        let b = rpe(&gt, &est, &assoc, &RpeConfig::fixed(1)).unwrap();
        assert!((a.trans_rmse - b.trans_rmse).abs() <= 1e-12);
        assert!((a.rot_mean - b.rot_mean).abs() <= 1e-12);
    }

    #[test]
    fn dropout_count_and_timestamps() {
        let gt = random_trajectory(5, 101, 0.01, 0.03).unwrap();
        let spec = PerturbationSpec {
            dropout_fraction: 0.25,
            seed: 9,
            ..Default::default()
        };
        let est = perturb(&gt, &spec).unwrap();
        assert_eq!(est.len(), 76);
        for p in est.iter() {
            assert!(gt
                .iter()
                .any(|q| q.timestamp == p.timestamp && q.translation == p.translation));
        }
        assert_eq!(perturb(&gt, &spec).unwrap(), est);
    }

    #[test]
    fn noise_is_seeded() {
        let gt = random_trajectory(5, 50, 0.01, 0.03).unwrap();
        let spec = |seed| PerturbationSpec {
            noise_sigma_trans: 0.01,
            noise_sigma_rot: 0.01,
            seed,
            ..Default::default()
        };
        assert_eq!(perturb(&gt, &spec(1)).unwrap(), perturb(&gt, &spec(1)).unwrap());
        assert_ne!(perturb(&gt, &spec(1)).unwrap(), perturb(&gt, &spec(2)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let gt = random_trajectory(5, 10, 0.01, 0.03).unwrap();
        for spec in [
            PerturbationSpec {
                noise_sigma_trans: -1.0,
                ..Default::default()
            },
            PerturbationSpec {
                dropout_fraction: 1.0,
                ..Default::default()
            },
            PerturbationSpec {
                drift_rot_per_frame: 0.1,
                drift_axis: [0.0; 3],
                ..Default::default()
            },
        ] {
            assert!(perturb(&gt, &spec).is_err());
        }
    }
}
