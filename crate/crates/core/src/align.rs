//! Closed-form rigid alignment of matched point sets.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom3d::{Pose, Rotation};
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    /// Maps estimated points onto ground-truth points.
    pub transform: Pose,
    /// Root mean squared residual `||S p_i - q_i||`, meters.
    pub rmse_after: f64,
    pub point_count: usize,
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    let mut acc = [CompensatedSum::new(); 3];
    for p in points {
        for (a, v) in acc.iter_mut().zip(p.iter()) {
            a.add(*v);
        }
    }
    let n = points.len() as f64;
    Vector3::new(acc[0].total() / n, acc[1].total() / n, acc[2].total() / n)
}

/// Rigid transform `S` minimizing `Σ ||S p_i - q_i||²` with `p_i` the
/// estimated and `q_i` the ground-truth points.
///
/// Three or more points use the SVD of the cross-covariance with a determinant
/// correction, so the result is always a proper rotation. One point yields a
/// pure translation. Two points use the smallest rotation taking the estimated
/// segment direction onto the ground-truth one.
pub fn horn_align(gt_points: &[Vector3<f64>], est_points: &[Vector3<f64>]) -> Result<AlignmentResult> {
    if gt_points.len() != est_points.len() {
        return Err(Error::validation(format!(
            "point lists differ in length: {} ground-truth vs {} estimated",
            gt_points.len(),
            est_points.len()
        )));
    }
    if gt_points.is_empty() {
        return Err(Error::validation("alignment needs at least one point pair"));
    }
    if gt_points
        .iter()
        .chain(est_points)
        .any(|p| !p.iter().all(|v| v.is_finite()))
    {
        return Err(Error::validation("alignment input contains non-finite coordinates"));
    }

    let q_mean = centroid(gt_points);
    let p_mean = centroid(est_points);

    let rotation = match gt_points.len() {
        1 => Rotation::identity(),
        2 => shortest_arc(&(est_points[1] - est_points[0]), &(gt_points[1] - gt_points[0])),
        _ => kabsch_rotation(gt_points, est_points, &q_mean, &p_mean),
    };
    let translation = q_mean - rotation.rotate(&p_mean);
    let transform = Pose::new(rotation, translation);

    let residuals: CompensatedSum = gt_points
        .iter()
        .zip(est_points)
        .map(|(q, p)| (transform.apply(p) - q).norm_squared())
        .collect();
    let rmse_after = (residuals.total() / gt_points.len() as f64).sqrt();

    Ok(AlignmentResult {
        transform,
        rmse_after,
        point_count: gt_points.len(),
    })
}

fn kabsch_rotation(
    gt_points: &[Vector3<f64>],
    est_points: &[Vector3<f64>],
    q_mean: &Vector3<f64>,
    p_mean: &Vector3<f64>,
) -> Rotation {
    let mut h = Matrix3::zeros();
    for (q, p) in gt_points.iter().zip(est_points) {
        h += (p - p_mean) * (q - q_mean).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();

    // flip the axis of the smallest singular value if V Uᵀ is a reflection
    let d = (v * u.transpose()).determinant();
    let mut correction = Matrix3::identity();
    if d < 0.0 {
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        correction[(smallest, smallest)] = -1.0;
    }
    Rotation::from_matrix(&(v * correction * u.transpose()))
}

/// Minimal-angle rotation taking direction `from` onto direction `to`.
fn shortest_arc(from: &Vector3<f64>, to: &Vector3<f64>) -> Rotation {
    let (Some(a), Some(b)) = (from.try_normalize(0.0), to.try_normalize(0.0)) else {
        return Rotation::identity();
    };
    if let Some(q) = UnitQuaternion::rotation_between(&a, &b) {
        return Rotation::from_unit(q);
    }
    // antiparallel: half turn about any axis orthogonal to `a`
    let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let axis = a.cross(&helper);
    Rotation::from_axis_angle(&axis, std::f64::consts::PI)
}
