//! Per-frame tracking pipeline: optical-flow keypoint tracking, PnP pose
//! estimation, search-bound construction, contour-energy refinement, and
//! track maintenance.
//!
//! Each frame takes one of two routes. When enough keypoints survive and
//! PnP reaches consensus, the PnP pose seeds the refinement and the
//! search area is bounded by the reprojection-error constraint
//! `e(P) - e(P̂) ≤ e_max` (plus a wide safety box that keeps the region
//! compact when the keypoints are degenerate). Otherwise the pose is
//! extrapolated from the last two frames and refined inside the fixed
//! fallback box (±30° per Euler angle, ±0.1/±0.1/±0.2 of the model
//! diameter along the camera axes).

use nalgebra::{Point2, Point3};
use thiserror::Error;

use crate::config::Config;
use crate::contour::{ContourError, EdgeAdjacency};
use crate::energy::{contour_energy, EnergyContext};
use crate::geometry::{
    extrapolate, CameraIntrinsics, GeometryError, Mesh, Pose, PoseChart, PoseParams,
};
use crate::img::{gradient, GrayImage};
use crate::keypoints::{
    anchor_points, avg_reproj_error, detect_corners, klt_failed, solve_pnp_ransac, track_flow,
    CornerParams, FlowParams, PnPParams, TrackedPoint,
};
use crate::optimizer::{
    hop_schedule, refine_pose, BoxBounds, Constraints, HopSchedule,
    OptimizerError, RefineOptions, RefineScene,
};
use crate::synth::render_mask;
use crate::visibility::{bake_visibility, build_icosphere, Icosphere, VisibilityError, VisibilityMap};

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("tracking lost: {frames} consecutive frames without contour samples")]
    TrackingLost { frames: usize },
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Visibility(#[from] VisibilityError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Image(#[from] crate::img::ImageError),
}

/// Immutable per-sequence scene data: mesh, its edge table, the baked
/// visibility map, and the camera.
pub struct SceneModel {
    pub mesh: Mesh,
    pub adjacency: EdgeAdjacency,
    pub icosphere: Icosphere,
    pub visibility: VisibilityMap,
    pub intrinsics: CameraIntrinsics,
    pub diameter: f64,
}

impl SceneModel {
    /// Builds the scene, baking the visibility map at the configured
    /// icosphere level and raster resolution.
    pub fn build(
        mesh: Mesh,
        intrinsics: CameraIntrinsics,
        config: &Config,
    ) -> Result<Self, TrackerError> {
        let icosphere = build_icosphere(config.icosphere_level)?;
        let visibility = bake_visibility(&mesh, &icosphere, config.bake_resolution);
        Self::with_visibility(mesh, intrinsics, icosphere, visibility)
    }

    /// Builds the scene around an already-baked visibility map (for
    /// example one loaded from a sidecar file).
    pub fn with_visibility(
        mesh: Mesh,
        intrinsics: CameraIntrinsics,
        icosphere: Icosphere,
        visibility: VisibilityMap,
    ) -> Result<Self, TrackerError> {
        let adjacency = EdgeAdjacency::build(&mesh)?;
        let diameter = mesh.diameter();
        Ok(Self {
            mesh,
            adjacency,
            icosphere,
            visibility,
            intrinsics,
            diameter,
        })
    }

    pub fn refine_scene(&self) -> RefineScene<'_> {
        RefineScene {
            mesh: &self.mesh,
            adjacency: &self.adjacency,
            icosphere: &self.icosphere,
            visibility: &self.visibility,
            intrinsics: self.intrinsics,
            diameter: self.diameter,
        }
    }
}

/// Search-area bounds for one frame's refinement, in the chart centered
/// on the frame's initial pose estimate.
pub enum SearchBounds {
    /// Nonlinear reprojection-error constraint from the PnP inlier set,
    /// inside a loose safety box.
    Keypoint {
        reference: Pose,
        correspondences: Vec<(Point2<f64>, Point3<f64>)>,
        intrinsics: CameraIntrinsics,
        e_max: f64,
        /// `e(P̂)` cached on the inlier set.
        e_reference: f64,
        guard_rotation: f64,
        guard_translation: f64,
    },
    /// Fixed box around an extrapolated pose.
    FallbackBox {
        center: Pose,
        rotation_half: f64,
        translation_half: [f64; 3],
    },
}

/// Builds the keypoint-constrained bounds; caches `e(P̂)` over the final
/// PnP inlier set.
pub fn bounds_from_keypoints(
    p_hat: &Pose,
    correspondences: Vec<(Point2<f64>, Point3<f64>)>,
    intrinsics: &CameraIntrinsics,
    e_max: f64,
    guard_rotation: f64,
    guard_translation: f64,
) -> SearchBounds {
    let e_reference = avg_reproj_error(p_hat, &correspondences, intrinsics);
    SearchBounds::Keypoint {
        reference: *p_hat,
        correspondences,
        intrinsics: *intrinsics,
        e_max,
        e_reference,
        guard_rotation,
        guard_translation,
    }
}

/// Builds the fallback box around `center` sized by the model diameter.
pub fn bounds_fallback(center: &Pose, diameter: f64, config: &Config) -> SearchBounds {
    SearchBounds::FallbackBox {
        center: *center,
        rotation_half: config.fallback_rot_deg.to_radians(),
        translation_half: [
            config.fallback_trans_frac * diameter,
            config.fallback_trans_frac * diameter,
            config.fallback_trans_z_frac * diameter,
        ],
    }
}

impl SearchBounds {
    pub fn center(&self) -> &Pose {
        match self {
            SearchBounds::Keypoint { reference, .. } => reference,
            SearchBounds::FallbackBox { center, .. } => center,
        }
    }

    pub fn box_bounds(&self) -> BoxBounds {
        match self {
            SearchBounds::Keypoint {
                guard_rotation,
                guard_translation,
                ..
            } => BoxBounds::symmetric([
                *guard_rotation,
                *guard_rotation,
                *guard_rotation,
                *guard_translation,
                *guard_translation,
                *guard_translation,
            ]),
            SearchBounds::FallbackBox {
                rotation_half,
                translation_half,
                ..
            } => BoxBounds::symmetric([
                *rotation_half,
                *rotation_half,
                *rotation_half,
                translation_half[0],
                translation_half[1],
                translation_half[2],
            ]),
        }
    }

    /// The scalar constraint `c(params) ≤ 0`, if this bound has one.
    /// The chart must be centered on [`SearchBounds::center`].
    pub fn nonlinear_constraint(
        &self,
        chart: &PoseChart,
    ) -> Option<Box<dyn Fn(&[f64; 6]) -> f64 + Sync + '_>> {
        match self {
            SearchBounds::Keypoint {
                correspondences,
                intrinsics,
                e_max,
                e_reference,
                ..
            } => {
                let chart = *chart;
                let intrinsics = *intrinsics;
                let e_max = *e_max;
                let e_reference = *e_reference;
                Some(Box::new(move |x: &[f64; 6]| {
                    let pose = chart.pose_at(&PoseParams::from_array(*x));
                    avg_reproj_error(&pose, correspondences, &intrinsics) - e_reference - e_max
                }))
            }
            SearchBounds::FallbackBox { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathTaken {
    Keypoints,
    Fallback,
}

impl PathTaken {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathTaken::Keypoints => "klt",
            PathTaken::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrameDiagnostics {
    pub path: PathTaken,
    pub n_tracked: usize,
    /// PnP inlier rate; `None` on the fallback path.
    pub inlier_rate: Option<f64>,
    /// Contour energy of the accepted pose on the original frame.
    pub energy: f64,
    pub zero_samples: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FrameOutput {
    pub pose: Pose,
    pub diagnostics: FrameDiagnostics,
}

fn mix_seed(base: u64, frame: usize, salt: u64) -> u64 {
    let mut x = base
        ^ (frame as u64).wrapping_mul(0x9e3779b97f4a7c15)
        ^ salt.wrapping_mul(0xc2b2ae3d27d4eb4f);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Frame-by-frame tracker for one sequence. Create it with the known pose
/// of the first frame, then feed subsequent frames in order.
pub struct Tracker<'a> {
    scene: &'a SceneModel,
    config: Config,
    poses: Vec<Pose>,
    tracks: Vec<TrackedPoint>,
    prev_frame: GrayImage,
    zero_sample_streak: usize,
}

impl<'a> Tracker<'a> {
    pub fn new(
        scene: &'a SceneModel,
        config: Config,
        initial_pose: Pose,
        first_frame: GrayImage,
    ) -> Self {
        let mut tracker = Self {
            scene,
            config,
            poses: vec![initial_pose],
            tracks: Vec::new(),
            prev_frame: first_frame,
            zero_sample_streak: 0,
        };
        tracker.replenish_tracks(&initial_pose, &tracker.prev_frame.clone());
        tracker
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn latest_pose(&self) -> &Pose {
        self.poses.last().expect("initialized with a pose")
    }

    pub fn live_track_count(&self) -> usize {
        self.tracks.len()
    }

    fn flow_params(&self) -> FlowParams {
        FlowParams {
            levels: self.config.klt_pyramid_levels,
            window: self.config.klt_window_px,
            max_iterations: self.config.klt_max_iterations,
            epsilon: self.config.klt_epsilon_px,
            min_eigenvalue: self.config.klt_min_eigenvalue,
            max_residual: self.config.klt_max_residual,
        }
    }

    fn corner_params(&self) -> CornerParams {
        CornerParams {
            max_points: self.config.corner_max_points,
            quality: self.config.corner_quality,
            nms_radius: self.config.corner_nms_radius_px,
        }
    }

    fn pnp_params(&self) -> PnPParams {
        PnPParams {
            max_iterations: self.config.ransac_max_iterations,
            inlier_threshold: self.config.ransac_inlier_threshold_px,
            early_exit_rate: self.config.ransac_early_exit_rate,
            min_inlier_rate: self.config.min_inlier_rate,
        }
    }

    fn refine_options(&self) -> RefineOptions {
        RefineOptions {
            theta_sharp: self.config.theta_sharp(),
            spacing: self.config.sample_spacing_px,
            boundary_as_contour: self.config.boundary_edges_as_contour,
            blur_sigma: self.config.blur_sigma,
            final_hops: self.config.final_hops,
            rotation_step: self.config.grad_step_rot_rad,
            translation_step_frac: self.config.grad_step_trans_frac,
        }
    }

    fn schedule(&self) -> HopSchedule {
        let mut schedule = hop_schedule(
            self.scene.mesh.vertices().len(),
            self.scene.mesh.faces().len(),
        )
        .with_steps(
            self.config.hop_rot_step_deg.to_radians(),
            self.config.hop_trans_step_frac * self.scene.diameter,
        )
        .with_temperature(self.config.temperature);
        schedule.local_max_iterations = self.config.local_max_iterations;
        if let Some(v) = self.config.min_hops_override {
            schedule.min_hops = v;
        }
        if let Some(v) = self.config.max_effectless_override {
            schedule.max_effectless = v;
        }
        if let Some(v) = self.config.max_hops_override {
            schedule.max_hops = v;
        }
        schedule
    }

    /// Re-detects corners in the model footprint at `pose` and anchors
    /// them, topping surviving tracks back up to the configured maximum.
    fn replenish_tracks(&mut self, pose: &Pose, frame: &GrayImage) {
        let mask = render_mask(
            &self.scene.mesh,
            pose,
            &self.scene.intrinsics,
            (frame.width(), frame.height()),
        );
        let corners = detect_corners(frame, &mask, &self.corner_params());
        let radius2 = self.config.corner_nms_radius_px.powi(2);
        let mut candidates = Vec::new();
        for corner in corners {
            if self.tracks.len() + candidates.len() >= self.config.corner_max_points {
                break;
            }
            let taken = self
                .tracks
                .iter()
                .any(|t| (t.uv - corner).norm_squared() < radius2);
            if !taken {
                candidates.push(corner);
            }
        }
        let anchored = anchor_points(&candidates, pose, &self.scene.intrinsics, &self.scene.mesh);
        self.tracks.extend(anchored);
    }

    /// Contour energy and sample count of `pose` on the original frame.
    fn frame_energy(&self, frame_gradients: &crate::img::GradientField, pose: &Pose) -> (f64, bool) {
        let ctx = EnergyContext {
            gradients: frame_gradients,
            mesh: &self.scene.mesh,
            adjacency: &self.scene.adjacency,
            icosphere: &self.scene.icosphere,
            visibility: &self.scene.visibility,
            intrinsics: self.scene.intrinsics,
            theta_sharp: self.config.theta_sharp(),
            spacing: self.config.sample_spacing_px,
            boundary_as_contour: self.config.boundary_edges_as_contour,
            chart: PoseChart::new(*pose),
            rotation_step: self.config.grad_step_rot_rad,
            translation_step: self.config.grad_step_trans_frac * self.scene.diameter,
        };
        let energy = contour_energy(&ctx, &PoseParams::zero());
        let zero = ctx.sample_count(&PoseParams::zero()) == 0;
        (energy, zero)
    }

    /// Processes the next frame and returns the accepted pose.
    pub fn track_frame(&mut self, frame: GrayImage) -> Result<FrameOutput, TrackerError> {
        let frame_index = self.poses.len();

        // 1. Optical flow for all live tracks.
        let previous_points: Vec<Point2<f64>> = self.tracks.iter().map(|t| t.uv).collect();
        let flows = track_flow(&self.prev_frame, &frame, &previous_points, &self.flow_params());
        for (track, flow) in self.tracks.iter_mut().zip(&flows) {
            track.uv = flow.point;
            track.alive = flow.ok;
        }
        self.tracks.retain(|t| t.alive);
        let n_tracked = self.tracks.len();

        // 2. PnP + RANSAC on the surviving correspondences.
        let correspondences: Vec<(Point2<f64>, Point3<f64>)> = self
            .tracks
            .iter()
            .map(|t| (t.uv, t.model_point))
            .collect();
        let pnp = if n_tracked >= 4 {
            solve_pnp_ransac(
                &correspondences,
                &self.scene.intrinsics,
                &self.pnp_params(),
                mix_seed(self.config.seed, frame_index, 1),
            )
            .ok()
        } else {
            None
        };

        // 3. Route: keypoint bounds or extrapolation + fallback box.
        let (path, inlier_rate, init_pose, bounds) = match pnp {
            Some(result)
                if !klt_failed(
                    n_tracked,
                    result.inlier_rate,
                    self.config.klt_min_points,
                    self.config.min_inlier_rate,
                ) =>
            {
                let inlier_corr: Vec<(Point2<f64>, Point3<f64>)> = result
                    .inliers
                    .iter()
                    .map(|&i| correspondences[i])
                    .collect();
                let bounds = bounds_from_keypoints(
                    &result.pose,
                    inlier_corr,
                    &self.scene.intrinsics,
                    self.config.e_max_px,
                    self.config.guard_rot_deg.to_radians(),
                    self.config.guard_trans_frac * self.scene.diameter,
                );
                (
                    PathTaken::Keypoints,
                    Some(result.inlier_rate),
                    result.pose,
                    bounds,
                )
            }
            _ => {
                let n = self.poses.len();
                let predicted = if n >= 2 {
                    extrapolate(&self.poses[n - 2], &self.poses[n - 1])
                } else {
                    self.poses[n - 1]
                };
                let bounds = bounds_fallback(&predicted, self.scene.diameter, &self.config);
                (PathTaken::Fallback, None, predicted, bounds)
            }
        };

        // 4. Contour-energy refinement inside the bounds.
        let chart = PoseChart::new(init_pose);
        let pose = if self.config.refine {
            let closure = bounds.nonlinear_constraint(&chart);
            let constraints = Constraints {
                bounds: bounds.box_bounds(),
                nonlinear: closure.as_deref(),
            };
            let outcome = refine_pose(
                &self.scene.refine_scene(),
                &frame,
                &init_pose,
                &constraints,
                &self.schedule(),
                &self.refine_options(),
                mix_seed(self.config.seed, frame_index, 2),
            )?;
            outcome.pose
        } else {
            init_pose
        };

        let frame_gradients = gradient(&frame)?;
        let (energy, zero_samples) = self.frame_energy(&frame_gradients, &pose);

        if zero_samples {
            self.zero_sample_streak += 1;
        } else {
            self.zero_sample_streak = 0;
        }
        if self.zero_sample_streak >= self.config.lost_zero_sample_frames {
            return Err(TrackerError::TrackingLost {
                frames: self.zero_sample_streak,
            });
        }

        // 5. Track maintenance at the accepted pose.
        self.replenish_tracks(&pose, &frame);

        // 6. Commit.
        self.poses.push(pose);
        self.prev_frame = frame;
        Ok(FrameOutput {
            pose,
            diagnostics: FrameDiagnostics {
                path,
                n_tracked,
                inlier_rate,
                energy,
                zero_samples,
            },
        })
    }
}

/// Runs the two refinement stages directly on a single frame; used by the
/// energy-landscape tooling where no tracking state exists.
pub fn refine_single_frame(
    scene: &SceneModel,
    config: &Config,
    frame: &GrayImage,
    init: &Pose,
    seed: u64,
) -> Result<Pose, TrackerError> {
    let bounds = bounds_fallback(init, scene.diameter, config);
    let constraints = Constraints::box_only(bounds.box_bounds());
    let mut schedule = hop_schedule(scene.mesh.vertices().len(), scene.mesh.faces().len())
        .with_steps(
            config.hop_rot_step_deg.to_radians(),
            config.hop_trans_step_frac * scene.diameter,
        )
        .with_temperature(config.temperature);
    schedule.local_max_iterations = config.local_max_iterations;
    let options = RefineOptions {
        theta_sharp: config.theta_sharp(),
        spacing: config.sample_spacing_px,
        boundary_as_contour: config.boundary_edges_as_contour,
        blur_sigma: config.blur_sigma,
        final_hops: config.final_hops,
        rotation_step: config.grad_step_rot_rad,
        translation_step_frac: config.grad_step_trans_frac,
    };
    let outcome = refine_pose(
        &scene.refine_scene(),
        frame,
        init,
        &constraints,
        &schedule,
        &options,
        seed,
    )?;
    Ok(outcome.pose)
}
