//! Rigid poses and the local Euler-angle parametrization.

use nalgebra::{Matrix3, Point3, Vector3};

use super::{GeometryError, SO3_TOLERANCE};

/// A rigid transform from model frame to camera frame: `x_cam = R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, checking that `rotation` is in SO(3) within
    /// [`SO3_TOLERANCE`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let gram = rotation.transpose() * rotation;
        let orth_err = (gram - Matrix3::identity()).abs().max();
        if orth_err > SO3_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!(
                "RᵀR deviates from identity by {orth_err:.3e}"
            )));
        }
        let det_err = (rotation.determinant() - 1.0).abs();
        if det_err > SO3_TOLERANCE {
            return Err(GeometryError::InvalidRotation(format!(
                "det(R) deviates from 1 by {det_err:.3e}"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds a pose without the SO(3) check. For rotations produced by
    /// composition of already-valid poses.
    pub fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Direction from the model origin toward the camera center, in the
    /// model frame. `None` when the camera sits at the model origin.
    pub fn view_direction(&self) -> Option<Vector3<f64>> {
        let camera_in_model = -(self.rotation.transpose() * self.translation);
        let norm = camera_in_model.norm();
        if norm < 1e-12 {
            None
        } else {
            Some(camera_in_model / norm)
        }
    }
}

/// Constant-velocity pose extrapolation on SE(3).
///
/// Composes the last relative motion onto the newest pose:
/// `P_i = P_{i-1} (P_{i-2}⁻¹ P_{i-1})`.
pub fn extrapolate(prev2: &Pose, prev1: &Pose) -> Pose {
    let relative = prev2.inverse().compose(prev1);
    prev1.compose(&relative)
}

/// Flat 6-vector pose coordinates: three XYZ Euler angles (radians) and a
/// translation offset.
///
/// Convention: the rotation is `R = Rz(ez) · Ry(ey) · Rx(ex)` (intrinsic
/// XYZ). The chart is only used locally — re-centered on a reference pose
/// each frame — so gimbal lock at `ey = ±π/2` stays far away in practice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseParams {
    pub euler: [f64; 3],
    pub translation: [f64; 3],
}

impl PoseParams {
    pub fn zero() -> Self {
        Self {
            euler: [0.0; 3],
            translation: [0.0; 3],
        }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            euler: [x[0], x[1], x[2]],
            translation: [x[3], x[4], x[5]],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.euler[0],
            self.euler[1],
            self.euler[2],
            self.translation[0],
            self.translation[1],
            self.translation[2],
        ]
    }
}

fn rotation_from_euler(euler: [f64; 3]) -> Matrix3<f64> {
    let (sx, cx) = euler[0].sin_cos();
    let (sy, cy) = euler[1].sin_cos();
    let (sz, cz) = euler[2].sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

fn euler_from_rotation(r: &Matrix3<f64>) -> Result<[f64; 3], GeometryError> {
    // R = Rz Ry Rx gives R[(2,0)] = -sin(ey).
    let sy = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let cy = (1.0 - sy * sy).sqrt();
    if cy < 1e-7 {
        return Err(GeometryError::GimbalLock { cos_pitch: cy });
    }
    let ex = r[(2, 1)].atan2(r[(2, 2)]);
    let ey = sy.asin();
    let ez = r[(1, 0)].atan2(r[(0, 0)]);
    Ok([ex, ey, ez])
}

/// Chart at the identity: `params = 0` maps to the identity pose.
pub fn pose_from_params(params: &PoseParams) -> Pose {
    Pose {
        rotation: rotation_from_euler(params.euler),
        translation: Vector3::from(params.translation),
    }
}

/// Inverse of [`pose_from_params`] away from gimbal lock.
pub fn params_from_pose(pose: &Pose) -> Result<PoseParams, GeometryError> {
    Ok(PoseParams {
        euler: euler_from_rotation(&pose.rotation)?,
        translation: [
            pose.translation.x,
            pose.translation.y,
            pose.translation.z,
        ],
    })
}

/// A pose chart centered on a reference pose.
///
/// The delta rotation is applied in the camera frame (left-multiplied) and
/// the delta translation is added in camera coordinates, so box bounds on
/// the parameters are per-Euler-angle rotation limits and per-camera-axis
/// translation limits around the reference.
#[derive(Debug, Clone, Copy)]
pub struct PoseChart {
    reference: Pose,
}

impl PoseChart {
    pub fn new(reference: Pose) -> Self {
        Self { reference }
    }

    pub fn identity() -> Self {
        Self {
            reference: Pose::identity(),
        }
    }

    pub fn reference(&self) -> &Pose {
        &self.reference
    }

    pub fn pose_at(&self, params: &PoseParams) -> Pose {
        Pose {
            rotation: rotation_from_euler(params.euler) * self.reference.rotation,
            translation: self.reference.translation + Vector3::from(params.translation),
        }
    }

    pub fn params_of(&self, pose: &Pose) -> Result<PoseParams, GeometryError> {
        let delta_rot = pose.rotation * self.reference.rotation.transpose();
        let dt = pose.translation - self.reference.translation;
        Ok(PoseParams {
            euler: euler_from_rotation(&delta_rot)?,
            translation: [dt.x, dt.y, dt.z],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_params_is_identity() {
        let pose = pose_from_params(&PoseParams::zero());
        assert_eq!(pose, Pose::identity());
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let pose = pose_from_params(&PoseParams {
            euler: [0.0, 0.0, FRAC_PI_2],
            translation: [0.0; 3],
        });
        let mapped = pose.transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert!((mapped - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gimbal_lock_is_flagged() {
        let pose = pose_from_params(&PoseParams {
            euler: [0.3, FRAC_PI_2, -0.2],
            translation: [0.0; 3],
        });
        assert!(matches!(
            params_from_pose(&pose),
            Err(GeometryError::GimbalLock { .. })
        ));
    }

    #[test]
    fn pose_validation_rejects_scaled_matrix() {
        let err = Pose::new(Matrix3::identity() * 1.001, Vector3::zeros()).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidRotation(_)));
    }

    #[test]
    fn inverse_composes_to_identity() {
        let pose = pose_from_params(&PoseParams {
            euler: [0.4, -0.2, 1.1],
            translation: [0.3, -0.9, 2.5],
        });
        let id = pose.inverse().compose(&pose);
        assert!((id.rotation - Matrix3::identity()).abs().max() < 1e-9);
        assert!(id.translation.norm() < 1e-9);
    }

    #[test]
    fn extrapolate_zero_velocity() {
        let pose = pose_from_params(&PoseParams {
            euler: [0.1, 0.2, 0.3],
            translation: [1.0, 2.0, 3.0],
        });
        let next = extrapolate(&pose, &pose);
        assert!((next.rotation - pose.rotation).abs().max() < 1e-12);
        assert!((next.translation - pose.translation).norm() < 1e-12);
    }

    #[test]
    fn extrapolate_pure_translation() {
        let p2 = Pose::from_parts_unchecked(Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0));
        let p1 = Pose::from_parts_unchecked(Matrix3::identity(), Vector3::new(0.0, 0.0, 2.0));
        let next = extrapolate(&p2, &p1);
        assert!((next.translation - Vector3::new(0.0, 0.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn extrapolate_rotation_about_z() {
        // 10° then 20° about z extrapolates to 30°; the oracle is the
        // explicit matrix product of the relative motion.
        let deg = std::f64::consts::PI / 180.0;
        let at = |a: f64| {
            pose_from_params(&PoseParams {
                euler: [0.0, 0.0, a],
                translation: [0.0; 3],
            })
        };
        let next = extrapolate(&at(10.0 * deg), &at(20.0 * deg));
        let oracle = at(20.0 * deg)
            .rotation()
            .to_owned()
            * (at(10.0 * deg).rotation().transpose() * at(20.0 * deg).rotation().to_owned());
        assert!((next.rotation - at(30.0 * deg).rotation).abs().max() < 1e-12);
        assert!((next.rotation - oracle).abs().max() < 1e-12);
    }

    fn random_euler() -> impl Strategy<Value = [f64; 3]> {
        // Stay away from the pitch singularity per the chart's contract.
        let safe = FRAC_PI_2 - 1e-3;
        [
            (-3.0..3.0f64),
            (-safe..safe),
            (-3.0..3.0f64),
        ]
    }

    proptest! {
        #[test]
        fn params_round_trip(euler in random_euler(), t in prop::array::uniform3(-5.0..5.0f64)) {
            let params = PoseParams { euler, translation: t };
            let pose = pose_from_params(&params);
            let back = params_from_pose(&pose).unwrap();
            let again = pose_from_params(&back);
            prop_assert!((again.rotation - pose.rotation).abs().max() < 1e-9);
            prop_assert!((again.translation - pose.translation).norm() < 1e-9);
        }

        #[test]
        fn extrapolate_is_left_equivariant(
            e1 in random_euler(), e2 in random_euler(), e3 in random_euler(),
            t1 in prop::array::uniform3(-2.0..2.0f64), t2 in prop::array::uniform3(-2.0..2.0f64), t3 in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let g = pose_from_params(&PoseParams { euler: e1, translation: t1 });
            let p2 = pose_from_params(&PoseParams { euler: e2, translation: t2 });
            let p1 = pose_from_params(&PoseParams { euler: e3, translation: t3 });
            let lhs = g.compose(&extrapolate(&p2, &p1));
            let rhs = extrapolate(&g.compose(&p2), &g.compose(&p1));
            prop_assert!((lhs.rotation - rhs.rotation).abs().max() < 1e-9);
            prop_assert!((lhs.translation - rhs.translation).norm() < 1e-9);
        }

        #[test]
        fn chart_round_trip(
            re in random_euler(), rt in prop::array::uniform3(-3.0..3.0f64),
            de in prop::array::uniform3(-0.5..0.5f64), dt in prop::array::uniform3(-1.0..1.0f64),
        ) {
            let reference = pose_from_params(&PoseParams { euler: re, translation: rt });
            let chart = PoseChart::new(reference);
            let params = PoseParams { euler: de, translation: dt };
            let pose = chart.pose_at(&params);
            let back = chart.params_of(&pose).unwrap();
            for i in 0..3 {
                prop_assert!((back.euler[i] - params.euler[i]).abs() < 1e-9);
                prop_assert!((back.translation[i] - params.translation[i]).abs() < 1e-9);
            }
        }
    }
}
