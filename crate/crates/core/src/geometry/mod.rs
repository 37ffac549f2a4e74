//! Core geometry: triangle meshes, rigid poses, camera intrinsics,
//! projection, and the Euler-angle pose chart used by the optimizer.

pub mod io;
mod mesh;
mod pose;
pub mod shapes;

pub use mesh::Mesh;
pub use pose::{
    extrapolate, params_from_pose, pose_from_params, Pose, PoseChart, PoseParams,
};

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for SO(3) membership checks (orthonormality and determinant).
pub const SO3_TOLERANCE: f64 = 1e-9;

/// Depth below which a camera-frame point counts as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("rotation matrix is not in SO(3): {0}")]
    InvalidRotation(String),
    #[error("camera focal lengths must be positive (fx = {fx}, fy = {fy})")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("pose is within gimbal lock of the XYZ Euler chart (|cos pitch| = {cos_pitch})")]
    GimbalLock { cos_pitch: f64 },
    #[error("mesh needs at least 3 vertices and 1 face (got {vertices} / {faces})")]
    MeshTooSmall { vertices: usize, faces: usize },
    #[error("face {face} references vertex {index}, but the mesh has {vertices} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: u32,
        vertices: usize,
    },
}

/// Pinhole camera intrinsics: focal lengths and principal point, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics { fx, fy });
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

/// Projects a model-frame point into the image under `pose`.
///
/// Fails with [`GeometryError::BehindCamera`] when the transformed depth is
/// not strictly positive.
pub fn project(
    pose: &Pose,
    k: &CameraIntrinsics,
    x: &Point3<f64>,
) -> Result<Point2<f64>, GeometryError> {
    project_camera_point(k, &pose.transform_point(x))
}

/// Projects a point already expressed in the camera frame.
pub fn project_camera_point(
    k: &CameraIntrinsics,
    p: &Point3<f64>,
) -> Result<Point2<f64>, GeometryError> {
    if p.z <= MIN_DEPTH {
        return Err(GeometryError::BehindCamera { z: p.z });
    }
    Ok(Point2::new(
        k.fx * p.x / p.z + k.cx,
        k.fy * p.y / p.z + k.cy,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 320.0, 240.0).unwrap()
    }

    #[test]
    fn project_on_optical_axis_hits_principal_point() {
        let k = test_intrinsics();
        let u = project(&Pose::identity(), &k, &Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(u, Point2::new(320.0, 240.0));
    }

    #[test]
    fn project_off_axis() {
        let k = test_intrinsics();
        let u = project(&Pose::identity(), &k, &Point3::new(1.0, 0.0, 2.0)).unwrap();
        assert_eq!(u, Point2::new(370.0, 240.0));
    }

    #[test]
    fn project_behind_camera_fails() {
        let k = test_intrinsics();
        let err = project(&Pose::identity(), &k, &Point3::new(0.0, 0.0, -1.0)).unwrap_err();
        assert!(matches!(err, GeometryError::BehindCamera { .. }));
    }

    #[test]
    fn projection_invariant_under_homogeneous_scale() {
        // Scaling a camera-frame point scales x, y and z together, so the
        // projected pixel is unchanged.
        let k = test_intrinsics();
        let p = Point3::new(0.3, -0.2, 2.0);
        let scaled = Point3::new(3.0 * p.x, 3.0 * p.y, 3.0 * p.z);
        let a = project_camera_point(&k, &p).unwrap();
        let b = project_camera_point(&k, &scaled).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn intrinsics_reject_nonpositive_focal() {
        assert!(CameraIntrinsics::new(0.0, 100.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(100.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn camera_json_round_trip() {
        let k = test_intrinsics();
        let s = serde_json::to_string(&k).unwrap();
        let back: CameraIntrinsics = serde_json::from_str(&s).unwrap();
        assert_eq!(k, back);
        // Unknown keys are rejected.
        assert!(serde_json::from_str::<CameraIntrinsics>(
            r#"{"fx":1.0,"fy":1.0,"cx":0.0,"cy":0.0,"skew":0.0}"#
        )
        .is_err());
    }
}
