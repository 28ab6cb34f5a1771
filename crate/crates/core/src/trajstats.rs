//! Per-sequence motion attributes and frame-skip resampling.

use serde::{Deserialize, Serialize};

use crate::geom3d::Trajectory;
use crate::numeric::{self, CompensatedSum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    /// Mean translation step between consecutive frames, meters/frame.
    pub mean_vel_per_frame: f64,
    /// Mean rotation between consecutive frames, degrees/frame.
    pub mean_ang_vel_per_frame: f64,
    /// Same quantity in radians/frame.
    pub mean_ang_vel_per_frame_rad: f64,
    /// Frame count; a fractional mean once averaged over a cohort.
    pub frame_count: f64,
    /// Seconds between first and last timestamp.
    pub duration: Option<f64>,
    /// Meters.
    pub path_length: f64,
    /// Meters/second, when timestamps are present and span a positive duration.
    pub mean_vel_per_sec: Option<f64>,
    /// Degrees/second.
    pub mean_ang_vel_per_sec: Option<f64>,
}

pub fn sequence_stats(t: &Trajectory) -> SequenceStats {
    let poses = t.poses();
    let mut path = CompensatedSum::new();
    let mut turn = CompensatedSum::new();
    for w in poses.windows(2) {
        path.add((w[1].translation - w[0].translation).norm());
        turn.add(w[0].rotation.inverse().compose(&w[1].rotation).angle());
    }
    let steps = poses.len().saturating_sub(1);
    let (mean_vel, mean_ang_rad) = if steps == 0 {
        (0.0, 0.0)
    } else {
        (path.total() / steps as f64, turn.total() / steps as f64)
    };

    let duration = match (
        poses.first().and_then(|p| p.timestamp),
        poses.last().and_then(|p| p.timestamp),
    ) {
        (Some(a), Some(b)) if t.is_timestamped() => Some(b - a),
        _ => None,
    };
    let positive = duration.filter(|d| *d > 0.0);

    SequenceStats {
        mean_vel_per_frame: mean_vel,
        mean_ang_vel_per_frame: mean_ang_rad.to_degrees(),
        mean_ang_vel_per_frame_rad: mean_ang_rad,
        frame_count: poses.len() as f64,
        duration,
        path_length: path.total(),
        mean_vel_per_sec: positive.map(|d| path.total() / d),
        mean_ang_vel_per_sec: positive.map(|d| turn.total().to_degrees() / d),
    }
}

/// Keeps poses `0, stride, 2·stride, …`. "Skip k" corresponds to `stride = k + 1`.
pub fn resample_stride(t: &Trajectory, stride: usize) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::validation("stride must be at least 1"));
    }
    let poses = t.iter().step_by(stride).copied().collect();
    Trajectory::new(t.id(), poses)
}

/// Field-wise arithmetic mean over sequences. Optional fields are averaged over
/// the sequences that have them.
pub fn cohort_stats(stats: &[SequenceStats]) -> Result<SequenceStats> {
    if stats.is_empty() {
        return Err(Error::validation("cohort statistics need at least one sequence"));
    }
    let avg = |f: fn(&SequenceStats) -> f64| {
        let v: Vec<f64> = stats.iter().map(f).collect();
        numeric::mean(&v).unwrap_or(0.0)
    };
    let avg_opt = |f: fn(&SequenceStats) -> Option<f64>| {
        let v: Vec<f64> = stats.iter().filter_map(f).collect();
        numeric::mean(&v)
    };
    Ok(SequenceStats {
        mean_vel_per_frame: avg(|s| s.mean_vel_per_frame),
        mean_ang_vel_per_frame: avg(|s| s.mean_ang_vel_per_frame),
        mean_ang_vel_per_frame_rad: avg(|s| s.mean_ang_vel_per_frame_rad),
        frame_count: avg(|s| s.frame_count),
        duration: avg_opt(|s| s.duration),
        path_length: avg(|s| s.path_length),
        mean_vel_per_sec: avg_opt(|s| s.mean_vel_per_sec),
        mean_ang_vel_per_sec: avg_opt(|s| s.mean_ang_vel_per_sec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom3d::{Pose, Rotation};
    use nalgebra::Vector3;

    fn line(n: usize, step: f64) -> Trajectory {
        let poses = (0..n)
            .map(|i| Pose::from_translation(Vector3::new(step * i as f64, 0.0, 1.0)).with_timestamp(i as f64 / 30.0))
            .collect();
        Trajectory::new("line", poses).unwrap()
    }

    #[test]
    fn static_trajectory() {
        let t = Trajectory::new("s", vec![Pose::identity(); 5]).unwrap();
        let s = sequence_stats(&t);
        assert_eq!(s.mean_vel_per_frame, 0.0);
        assert_eq!(s.mean_ang_vel_per_frame, 0.0);
        assert_eq!(s.frame_count, 5.0);
        assert_eq!(s.duration, None);
    }

    #[test]
    fn single_frame() {
        let t = Trajectory::new("s", vec![Pose::identity().with_timestamp(3.0)]).unwrap();
        let s = sequence_stats(&t);
        assert_eq!(s.mean_vel_per_frame, 0.0);
        assert_eq!(s.duration, Some(0.0));
        assert_eq!(s.mean_vel_per_sec, None);
    }

    #[test]
    fn straight_line() {
        let s = sequence_stats(&line(1000, 0.006));
        assert!((s.mean_vel_per_frame - 0.006).abs() < 1e-12);
        assert!((s.path_length - 0.006 * 999.0).abs() < 1e-9);
        assert!((s.mean_vel_per_sec.unwrap() - 0.18).abs() < 1e-9);
    }

    #[test]
    fn angular_rate_in_degrees() {
        let poses = (0..11)
            .map(|i| Pose::new(Rotation::rz((2.0f64).to_radians() * i as f64), Vector3::zeros()))
            .collect();
        let s = sequence_stats(&Trajectory::new("spin", poses).unwrap());
        assert!((s.mean_ang_vel_per_frame - 2.0).abs() < 1e-9);
        assert!((s.mean_ang_vel_per_frame_rad - (2.0f64).to_radians()).abs() < 1e-12);
    }

    #[test]
    fn stride_examples() {
        let t = line(10, 1.0);
        assert_eq!(resample_stride(&t, 1).unwrap(), t);
        let r = resample_stride(&t, 3).unwrap();
        let xs: Vec<f64> = r.iter().map(|p| p.translation.x).collect();
        assert_eq!(xs, vec![0.0, 3.0, 6.0, 9.0]);
        assert!(resample_stride(&t, 0).is_err());

        let base = sequence_stats(&line(101, 0.01)).mean_vel_per_frame;
        let doubled = sequence_stats(&resample_stride(&line(101, 0.01), 2).unwrap()).mean_vel_per_frame;
        assert!((doubled - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn cohort_means() {
        let mut a = sequence_stats(&line(800, 0.01));
        let b = sequence_stats(&line(1200, 0.01));
        let c = cohort_stats(&[a.clone(), b]).unwrap();
        assert_eq!(c.frame_count, 1000.0);
        assert_eq!(cohort_stats(&[a.clone()]).unwrap(), a);
        let c = cohort_stats(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!((c.mean_vel_per_frame - a.mean_vel_per_frame).abs() < 1e-15);
        assert!((c.path_length - a.path_length).abs() < 1e-12);
        assert_eq!(c.frame_count, a.frame_count);
        assert!(cohort_stats(&[]).is_err());

        a.duration = None;
        let d = sequence_stats(&line(31, 0.01));
        let c = cohort_stats(&[a, d]).unwrap();
        assert_eq!(c.duration, Some(1.0));
    }
}
