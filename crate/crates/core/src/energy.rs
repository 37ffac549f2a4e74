//! The contour energy: the mean absolute dot product between the image
//! gradient and the contour normal over samples placed along the projected
//! model contour. Maximal when the projected contour lies on strong image
//! edges with matching orientation.
//!
//! Degenerate poses (empty contour, all samples clipped, object behind the
//! camera) evaluate to zero so the optimizer always sees a finite
//! landscape.


use rayon::prelude::*;

use crate::contour::{detect_contours, sample_contour, EdgeAdjacency};
use crate::geometry::{CameraIntrinsics, Mesh, PoseChart, PoseParams};
use crate::img::GradientField;
use crate::visibility::{invisible_set_for_pose, Icosphere, VisibilityMap};

/// Everything the energy needs for one optimization stage. Immutable, so
/// concurrent evaluations at different parameters are safe.
pub struct EnergyContext<'a> {
    pub gradients: &'a GradientField,
    pub mesh: &'a Mesh,
    pub adjacency: &'a EdgeAdjacency,
    pub icosphere: &'a Icosphere,
    pub visibility: &'a VisibilityMap,
    pub intrinsics: CameraIntrinsics,
    pub theta_sharp: f64,
    pub spacing: f64,
    pub boundary_as_contour: bool,
    /// Chart the optimizer's parameters live in (centered on the frame's
    /// initial pose estimate).
    pub chart: PoseChart,
    /// Finite-difference step for the Euler coordinates, radians.
    pub rotation_step: f64,
    /// Finite-difference step for the translation coordinates, model
    /// units (scaled from the model diameter by the caller).
    pub translation_step: f64,
}

impl EnergyContext<'_> {
    /// Discretization signature at `params`: the per-segment in-domain
    /// sample counts. The energy is smooth (up to the kinks of the
    /// absolute value at individual samples) on every region where this
    /// signature is constant; finite differences straddling a signature
    /// change probe across a jump of the discretized energy.
    pub fn sample_signature(&self, params: &PoseParams) -> Vec<u32> {
        let pose = self.chart.pose_at(params);
        let Ok(invisible) = invisible_set_for_pose(&pose, self.icosphere, self.visibility) else {
            return Vec::new();
        };
        let segments = detect_contours(
            self.mesh,
            self.adjacency,
            &pose,
            &invisible,
            self.theta_sharp,
            self.boundary_as_contour,
        );
        let domain = (self.gradients.width(), self.gradients.height());
        crate::contour::per_segment_sample_counts(&segments, &self.intrinsics, self.spacing, domain)
    }

    /// Number of in-domain contour samples at the given parameters.
    pub fn sample_count(&self, params: &PoseParams) -> usize {
        let pose = self.chart.pose_at(params);
        let Ok(invisible) = invisible_set_for_pose(&pose, self.icosphere, self.visibility) else {
            return 0;
        };
        let segments = detect_contours(
            self.mesh,
            self.adjacency,
            &pose,
            &invisible,
            self.theta_sharp,
            self.boundary_as_contour,
        );
        let domain = (self.gradients.width(), self.gradients.height());
        match sample_contour(&segments, &self.intrinsics, self.spacing, domain) {
            Ok(samples) => samples.len(),
            Err(_) => 0,
        }
    }
}

/// Evaluates the discretized contour energy at `params`.
pub fn contour_energy(ctx: &EnergyContext, params: &PoseParams) -> f64 {
    let pose = ctx.chart.pose_at(params);
    if pose.translation().z <= 0.0 {
        return 0.0;
    }
    let Ok(invisible) = invisible_set_for_pose(&pose, ctx.icosphere, ctx.visibility) else {
        return 0.0;
    };
    let segments = detect_contours(
        ctx.mesh,
        ctx.adjacency,
        &pose,
        &invisible,
        ctx.theta_sharp,
        ctx.boundary_as_contour,
    );
    if segments.is_empty() {
        return 0.0;
    }
    let domain = (ctx.gradients.width(), ctx.gradients.height());
    let Ok(samples) = sample_contour(&segments, &ctx.intrinsics, ctx.spacing, domain) else {
        return 0.0;
    };
    let mut sum = 0.0;
    for (point, normal) in samples.points.iter().zip(&samples.normals) {
        let g = ctx
            .gradients
            .sample_bilinear(point)
            .expect("sample_contour only keeps in-domain points");
        sum += g.dot(normal).abs();
    }
    sum / samples.len() as f64
}

/// Central-difference gradient of the energy with per-kind step sizes.
/// The six probes run in parallel; each probe is a pure evaluation, so the
/// result does not depend on the thread count.
pub fn energy_gradient(ctx: &EnergyContext, params: &PoseParams) -> [f64; 6] {
    energy_gradient_with_steps(ctx, params, ctx.rotation_step, ctx.translation_step)
}

pub fn energy_gradient_with_steps(
    ctx: &EnergyContext,
    params: &PoseParams,
    rotation_step: f64,
    translation_step: f64,
) -> [f64; 6] {
    let x = params.to_array();
    let components: Vec<f64> = (0..6)
        .into_par_iter()
        .map(|axis| {
            let h = if axis < 3 {
                rotation_step
            } else {
                translation_step
            };
            let mut forward = x;
            forward[axis] += h;
            let mut backward = x;
            backward[axis] -= h;
            let fp = contour_energy(ctx, &PoseParams::from_array(forward));
            let fm = contour_energy(ctx, &PoseParams::from_array(backward));
            (fp - fm) / (2.0 * h)
        })
        .collect();
    components.try_into().expect("six axes")
}

/// Builds a centered white-square-on-black test frame: the unit of most
/// energy fixtures. Exposed for reuse by integration tests and the
/// landscape tool examples.
pub fn square_test_frame(
    width: usize,
    height: usize,
    center: (f64, f64),
    half_side: f64,
) -> crate::img::GrayImage {
    crate::img::GrayImage::from_fn(width, height, |x, y| {
        let inside = (x as f64 - center.0).abs() <= half_side
            && (y as f64 - center.1).abs() <= half_side;
        if inside {
            1.0
        } else {
            0.0
        }
    })
}

/// Mean |∇I·n| along the outline of an axis-aligned square, evaluated
/// directly from the gradient field. Independent oracle for the energy of
/// a square silhouette.
pub fn square_outline_energy_oracle(
    field: &GradientField,
    center: (f64, f64),
    half_side: f64,
    spacing: f64,
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    let side = 2.0 * half_side;
    let n = (side / spacing).ceil().max(1.0) as usize;
    for edge in 0..4 {
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64 * side - half_side;
            let (point, normal) = match edge {
                0 => (
                    nalgebra::Point2::new(center.0 + t, center.1 - half_side),
                    nalgebra::Vector2::new(0.0, 1.0),
                ),
                1 => (
                    nalgebra::Point2::new(center.0 + t, center.1 + half_side),
                    nalgebra::Vector2::new(0.0, 1.0),
                ),
                2 => (
                    nalgebra::Point2::new(center.0 - half_side, center.1 + t),
                    nalgebra::Vector2::new(1.0, 0.0),
                ),
                _ => (
                    nalgebra::Point2::new(center.0 + half_side, center.1 + t),
                    nalgebra::Vector2::new(1.0, 0.0),
                ),
            };
            if let Ok(g) = field.sample_bilinear(&point) {
                sum += g.dot(&normal).abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Places a unit cube so that its front face projects exactly onto a
/// square of the given half side centered at the principal point.
pub fn cube_over_square_pose(k: &CameraIntrinsics, half_side_px: f64) -> (Mesh, crate::geometry::Pose) {
    use crate::geometry::{shapes, Pose};
    let cube = shapes::cube(1.0);
    // Front face at depth z - 0.5 must span 2*half_side_px pixels:
    // fx * 1 / (z - 0.5) = 2 * half_side_px.
    let z = k.fx / (2.0 * half_side_px) + 0.5;
    let pose = Pose::from_parts_unchecked(
        nalgebra::Matrix3::identity(),
        nalgebra::Vector3::new(0.0, 0.0, z),
    );
    (cube, pose)
}

/// Convenience: the camera-frame depth of the nearest cube face for
/// [`cube_over_square_pose`] fixtures.
pub fn cube_front_depth(pose: &crate::geometry::Pose) -> f64 {
    pose.translation().z - 0.5
}

#[allow(dead_code)]
fn _assert_context_is_sync<'a>(ctx: &'a EnergyContext<'a>) -> &'a dyn Sync {
    ctx
}
