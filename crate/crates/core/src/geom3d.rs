//! Rigid-body geometry: rotations, poses and trajectories.
//!
//! Rotations are stored as unit quaternions in Hamilton convention with the
//! scalar part first, canonicalized to a non-negative scalar part. A [`Pose`]
//! is the pair `(R, t)` acting on points as `x' = R x + t`, equivalent to the
//! homogeneous matrix `[R t; 0 1]`.

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Accepted range for the norm of a quaternion before renormalization.
pub const QUATERNION_NORM_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    q: UnitQuaternion<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            q: UnitQuaternion::identity(),
        }
    }

    /// Builds a rotation from quaternion components in `(w, x, y, z)` order.
    ///
    /// The input is renormalized; a norm outside [`QUATERNION_NORM_RANGE`] is
    /// rejected since it almost always means a corrupted or misordered record.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        let (lo, hi) = QUATERNION_NORM_RANGE;
        if !(lo..=hi).contains(&norm) {
            return Err(Error::QuaternionNorm { norm });
        }
        Ok(Self::canonical(Quaternion::new(w, x, y, z)))
    }

    /// Rotation by `angle` radians about `axis`. A zero axis yields the identity.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        match Unit::try_new(*axis, 0.0) {
            Some(axis) => Self::from_unit(UnitQuaternion::from_axis_angle(&axis, angle)),
            None => Self::identity(),
        }
    }

    /// Rotation about the z axis.
    pub fn rz(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    /// Projects an (approximately) orthonormal matrix onto the nearest rotation.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = Rotation3::from_matrix_unchecked(*m);
        Self::from_unit(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub(crate) fn from_unit(q: UnitQuaternion<f64>) -> Self {
        Self::canonical(q.into_inner())
    }

    fn canonical(q: Quaternion<f64>) -> Self {
        let flip = if q.w != 0.0 {
            q.w < 0.0
        } else {
            // scalar part is zero: the first non-zero vector component decides
            [q.i, q.j, q.k].into_iter().find(|c| *c != 0.0).is_some_and(|c| c < 0.0)
        };
        let q = if flip { -q } else { q };
        Rotation {
            q: UnitQuaternion::new_normalize(q),
        }
    }

    /// Quaternion components in `(w, x, y, z)` order, `w >= 0`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.q.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn unit_quaternion(&self) -> &UnitQuaternion<f64> {
        &self.q
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        *self.q.to_rotation_matrix().matrix()
    }

    pub fn inverse(&self) -> Self {
        Self::from_unit(self.q.inverse())
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Self {
        Self::from_unit(self.q * other.q)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q.transform_vector(v)
    }

    /// Rotation angle in radians, in `[0, pi]`. See [`angle_of`].
    pub fn angle(&self) -> f64 {
        angle_of(self)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Rotation angle `∠R = arccos((tr(R) - 1) / 2)` in radians.
///
/// Evaluated on the quaternion as `2 atan2(|v|, |w|)`, which equals the trace
/// form for every unit quaternion but keeps full precision near 0 and pi where
/// the arccos of a trace is ill-conditioned.
pub fn angle_of(r: &Rotation) -> f64 {
    let q = r.q.quaternion();
    2.0 * q.imag().norm().atan2(q.w.abs())
}

/// Trace form of the rotation angle for a rotation matrix, with the arccos
/// argument clamped to `[-1, 1]`.
pub fn angle_of_matrix(m: &Matrix3<f64>) -> f64 {
    ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
    /// Seconds.
    pub timestamp: Option<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
            timestamp: None,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Rotation::identity(), translation)
    }

    pub fn with_timestamp(mut self, timestamp: f64) -> Self {
        self.timestamp = Some(timestamp);
        self
    }

    /// Homogeneous-matrix product `self * other`; the result carries no timestamp.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation.compose(&other.rotation),
            self.rotation.rotate(&other.translation) + self.translation,
        )
    }

    /// `(Rᵀ, -Rᵀ t)`; the timestamp is kept.
    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose {
            translation: -rotation.rotate(&self.translation),
            rotation,
            timestamp: self.timestamp,
        }
    }

    /// `R x + t`.
    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(x) + self.translation
    }

    pub fn trans(&self) -> Vector3<f64> {
        self.translation
    }

    pub fn rot(&self) -> Rotation {
        self.rotation
    }

    /// `self⁻¹ * other`, the motion from `self` to `other`.
    pub fn relative(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Rotation angle and translation norm of `self⁻¹ * other`.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        let d = self.relative(other);
        (d.rotation.angle(), d.translation.norm())
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl std::ops::Mul for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Ordered, non-empty sequence of poses. Timestamps, where present, strictly
/// increase.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, poses: Vec<Pose>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::validation("trajectory must contain at least one pose"));
        }
        let mut previous: Option<f64> = None;
        for (i, pose) in poses.iter().enumerate() {
            if let Some(t) = pose.timestamp {
                if !t.is_finite() {
                    return Err(Error::validation(format!("pose {i}: non-finite timestamp")));
                }
                if let Some(prev) = previous {
                    if t <= prev {
                        return Err(Error::validation(format!(
                            "pose {i}: timestamp {t} does not increase (previous {prev})"
                        )));
                    }
                }
                previous = Some(t);
            }
        }
        Ok(Trajectory { id: id.into(), poses })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pose> {
        self.poses.iter()
    }

    pub fn is_timestamped(&self) -> bool {
        self.poses.iter().all(|p| p.timestamp.is_some())
    }

    pub fn into_poses(self) -> Vec<Pose> {
        self.poses
    }

    /// Left-composes every pose with `g`, keeping timestamps.
    pub fn transformed(&self, g: &Pose) -> Trajectory {
        let poses = self
            .poses
            .iter()
            .map(|p| Pose {
                timestamp: p.timestamp,
                ..g.compose(p)
            })
            .collect();
        Trajectory {
            id: self.id.clone(),
            poses,
        }
    }
}

impl std::ops::Index<usize> for Trajectory {
    type Output = Pose;

    fn index(&self, index: usize) -> &Pose {
        &self.poses[index]
    }
}

impl<'a> IntoIterator for &'a Trajectory {
    type Item = &'a Pose;
    type IntoIter = std::slice::Iter<'a, Pose>;

    fn into_iter(self) -> Self::IntoIter {
        self.poses.iter()
    }
}

/// Serialized form: `[w, x, y, z]`.
impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.wxyz().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(deserializer)?;
        Rotation::from_wxyz(w, x, y, z).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    rotation: Rotation,
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<f64>,
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseRecord {
            rotation: self.rotation,
            translation: self.translation.into(),
            timestamp: self.timestamp,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = PoseRecord::deserialize(deserializer)?;
        Ok(Pose {
            rotation: r.rotation,
            translation: r.translation.into(),
            timestamp: r.timestamp,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_pose_eq(a: &Pose, b: &Pose, tol: f64) {
        let (angle, dist) = a.distance(b);
        assert!(angle <= tol && dist <= tol, "{a:?} vs {b:?}: {angle} {dist}");
    }

    #[test]
    fn compose_by_hand() {
        let a = Pose::new(Rotation::rz(FRAC_PI_2), Vector3::new(1.0, 0.0, 0.0));
        let b = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let c = a.compose(&b);
        let expected = Pose::new(Rotation::rz(FRAC_PI_2), Vector3::new(1.0, 1.0, 0.0));
        assert_pose_eq(&c, &expected, 1e-12);
        assert!((c.trans() - Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
        // matches the 4x4 product
        let m = a.to_matrix() * b.to_matrix();
        assert!((m - c.to_matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn compose_identity_and_inverse() {
        let p = Pose::new(
            Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 1.3),
            Vector3::new(0.3, -2.0, 4.0),
        );
        assert_pose_eq(&Pose::identity().compose(&p), &p, 1e-15);
        assert_pose_eq(&p.compose(&p.inverse()), &Pose::identity(), 1e-12);
        assert!(p.compose(&p.inverse()).timestamp.is_none());
    }

    #[test]
    fn inverse_examples() {
        assert_pose_eq(&Pose::identity().inverse(), &Pose::identity(), 0.0);
        let p = Pose::from_translation(Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(p.inverse().translation, Vector3::new(-1.0, -2.0, -3.0));
        let p = Pose::new(Rotation::rz(FRAC_PI_2), Vector3::new(1.0, 0.0, 0.0));
        let expected = Pose::new(Rotation::rz(-FRAC_PI_2), Vector3::new(0.0, 1.0, 0.0));
        assert_pose_eq(&p.inverse(), &expected, 1e-12);
    }

    #[test]
    fn apply_examples() {
        let x = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(Pose::identity().apply(&x), x);
        let p = Pose::from_translation(Vector3::x());
        assert_eq!(p.apply(&Vector3::zeros()), Vector3::x());
        let p = Pose::new(Rotation::rz(FRAC_PI_2), Vector3::zeros());
        assert!((p.apply(&Vector3::x()) - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn trans_projection() {
        assert_eq!(Pose::identity().trans(), Vector3::zeros());
        let p = Pose::new(Rotation::rz(FRAC_PI_2), Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(p.trans(), Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn angle_examples() {
        assert_eq!(Rotation::identity().angle(), 0.0);
        assert!((Rotation::rz(PI).angle() - PI).abs() < 1e-15);
        let axis = Vector3::new(0.3, -0.8, 0.52);
        assert!((Rotation::from_axis_angle(&axis, 0.7).angle() - 0.7).abs() < 1e-15);
        // beyond pi wraps back into [0, pi]
        assert!((Rotation::rz(1.5 * PI).angle() - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn matrix_angle_clamps() {
        // trace slightly above 3 from rounding must not produce NaN
        let m = Matrix3::identity() * (1.0 + 1e-15);
        assert_eq!(angle_of_matrix(&m), 0.0);
        let m = Rotation::rz(PI).matrix() * (1.0 + 1e-15);
        assert!((angle_of_matrix(&m) - PI).abs() < 1e-12);
        let r = Rotation::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 1.1);
        assert!((angle_of_matrix(&r.matrix()) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn relative_examples() {
        let p = Pose::new(Rotation::rz(0.4), Vector3::new(1.0, 2.0, 3.0));
        assert_pose_eq(&p.relative(&p), &Pose::identity(), 1e-15);
        assert_pose_eq(&Pose::identity().relative(&p), &p, 1e-15);
        let a = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let b = Pose::from_translation(Vector3::new(3.0, 0.0, 0.0));
        assert_eq!(a.relative(&b).translation, Vector3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn quaternion_validation() {
        assert!(matches!(
            Rotation::from_wxyz(0.5, 0.0, 0.0, 0.0),
            Err(Error::QuaternionNorm { .. })
        ));
        assert!(Rotation::from_wxyz(1.2, 0.0, 0.0, 0.0).is_err());
        let r = Rotation::from_wxyz(1.05, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(r.wxyz(), [1.0, 0.0, 0.0, 0.0]);
        let r = Rotation::from_wxyz(-1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(r.wxyz(), [1.0, 0.0, 0.0, 0.0]);
        let r = Rotation::from_wxyz(0.0, 0.0, -1.0, 0.0).unwrap();
        assert_eq!(r.wxyz(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn trajectory_invariants() {
        assert!(Trajectory::new("empty", vec![]).is_err());
        let p = |t| Pose::identity().with_timestamp(t);
        assert!(Trajectory::new("ok", vec![p(0.0), p(0.1)]).is_ok());
        assert!(Trajectory::new("dup", vec![p(0.0), p(0.0)]).is_err());
        assert!(Trajectory::new("back", vec![p(1.0), p(0.5)]).is_err());
        assert!(Trajectory::new("untimed", vec![Pose::identity(); 3]).is_ok());
    }

    #[test]
    fn pose_serde_round_trip() {
        let p = Pose::new(Rotation::rz(0.3), Vector3::new(1.0, 2.0, 3.0)).with_timestamp(4.5);
        let json = serde_json::to_string(&p).unwrap();
        let back: Pose = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
