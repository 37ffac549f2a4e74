//! Anchoring 2D keypoints to 3D points on the mesh surface by casting
//! camera rays through the pixels and intersecting the mesh.

use nalgebra::{Point2, Point3, Vector3};

use crate::geometry::{CameraIntrinsics, Mesh, Pose};

/// A keypoint with its anchored model-frame surface point.
#[derive(Debug, Clone, Copy)]
pub struct TrackedPoint {
    pub uv: Point2<f64>,
    pub model_point: Point3<f64>,
    pub alive: bool,
}

/// Möller–Trumbore intersection of the ray `t·dir` (origin at the camera)
/// with one triangle; returns the ray parameter of the hit.
fn ray_triangle(dir: &Vector3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = -a.coords;
    let u = tvec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    (t > 1e-9).then_some(t)
}

/// Anchors each pixel to the nearest mesh intersection along its camera
/// ray; pixels whose ray misses the mesh are dropped.
pub fn anchor_points(
    points: &[Point2<f64>],
    pose: &Pose,
    k: &CameraIntrinsics,
    mesh: &Mesh,
) -> Vec<TrackedPoint> {
    let camera_vertices: Vec<Point3<f64>> = mesh
        .vertices()
        .iter()
        .map(|v| pose.transform_point(v))
        .collect();
    let inverse = pose.inverse();

    points
        .iter()
        .filter_map(|uv| {
            let dir = Vector3::new((uv.x - k.cx) / k.fx, (uv.y - k.cy) / k.fy, 1.0);
            let mut nearest: Option<f64> = None;
            for face in mesh.faces() {
                let a = &camera_vertices[face[0] as usize];
                let b = &camera_vertices[face[1] as usize];
                let c = &camera_vertices[face[2] as usize];
                if let Some(t) = ray_triangle(&dir, a, b, c) {
                    if nearest.is_none_or(|best| t < best) {
                        nearest = Some(t);
                    }
                }
            }
            nearest.map(|t| TrackedPoint {
                uv: *uv,
                model_point: inverse.transform_point(&Point3::from(dir * t)),
                alive: true,
            })
        })
        .collect()
}
