//! Tracker configuration.
//!
//! Every tunable of the pipeline lives here with its default. Angles are
//! given in degrees in the file format and converted at the call sites;
//! translation quantities marked `_frac` are fractions of the model
//! diameter. Unknown keys in a config file are rejected.

use serde::{Deserialize, Serialize};

macro_rules! default_fns {
    ($($name:ident: $ty:ty = $value:expr;)*) => {
        $(fn $name() -> $ty { $value })*
    };
}

default_fns! {
    d_theta_sharp_deg: f64 = 45.0;
    d_blur_sigma: f64 = 1.1;
    d_e_max_px: f64 = 2.5;
    d_fallback_rot_deg: f64 = 30.0;
    d_fallback_trans_frac: f64 = 0.1;
    d_fallback_trans_z_frac: f64 = 0.2;
    d_guard_rot_deg: f64 = 60.0;
    d_guard_trans_frac: f64 = 0.5;
    d_icosphere_level: u32 = 4;
    d_bake_resolution: u32 = 512;
    d_final_hops: usize = 5;
    d_sample_spacing_px: f64 = 8.0;
    d_boundary_edges_as_contour: bool = true;
    d_klt_min_points: usize = 8;
    d_min_inlier_rate: f64 = 0.3;
    d_klt_pyramid_levels: usize = 3;
    d_klt_window_px: usize = 15;
    d_klt_max_iterations: usize = 30;
    d_klt_epsilon_px: f64 = 0.01;
    d_klt_min_eigenvalue: f64 = 1e-7;
    d_klt_max_residual: f64 = 0.1;
    d_corner_max_points: usize = 300;
    d_corner_quality: f64 = 0.01;
    d_corner_nms_radius_px: f64 = 8.0;
    d_ransac_max_iterations: usize = 200;
    d_ransac_inlier_threshold_px: f64 = 4.0;
    d_ransac_early_exit_rate: f64 = 0.8;
    d_hop_rot_step_deg: f64 = 10.0;
    d_hop_trans_step_frac: f64 = 0.05;
    d_temperature: Option<f64> = None;
    d_local_max_iterations: usize = 100;
    d_grad_step_rot_rad: f64 = 1e-3;
    d_grad_step_trans_frac: f64 = 1e-3;
    d_refine: bool = true;
    d_lost_zero_sample_frames: usize = 5;
    d_seed: u64 = 0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Maximum dihedral angle of a sharp edge, degrees.
    #[serde(default = "d_theta_sharp_deg")]
    pub theta_sharp_deg: f64,
    /// Gaussian blur σ for the first refinement stage, pixels.
    #[serde(default = "d_blur_sigma")]
    pub blur_sigma: f64,
    /// Allowed increase of the average reprojection error inside the
    /// keypoint-constrained search area, pixels.
    #[serde(default = "d_e_max_px")]
    pub e_max_px: f64,
    /// Fallback search box: rotation half-width per Euler angle, degrees.
    #[serde(default = "d_fallback_rot_deg")]
    pub fallback_rot_deg: f64,
    /// Fallback search box: translation half-width along the sensor-plane
    /// axes, fraction of model diameter.
    #[serde(default = "d_fallback_trans_frac")]
    pub fallback_trans_frac: f64,
    /// Fallback search box: translation half-width along the camera axis,
    /// fraction of model diameter.
    #[serde(default = "d_fallback_trans_z_frac")]
    pub fallback_trans_z_frac: f64,
    /// Safety box around the keypoint constraint: rotation half-width,
    /// degrees.
    #[serde(default = "d_guard_rot_deg")]
    pub guard_rot_deg: f64,
    /// Safety box around the keypoint constraint: translation half-width,
    /// fraction of model diameter.
    #[serde(default = "d_guard_trans_frac")]
    pub guard_trans_frac: f64,
    /// Icosphere subdivision level for the visibility bake.
    #[serde(default = "d_icosphere_level")]
    pub icosphere_level: u32,
    /// Item-buffer resolution of the visibility bake, pixels per side.
    #[serde(default = "d_bake_resolution")]
    pub bake_resolution: u32,
    /// Hop count of the second (unblurred) refinement stage.
    #[serde(default = "d_final_hops")]
    pub final_hops: usize,
    /// Contour sample spacing, pixels.
    #[serde(default = "d_sample_spacing_px")]
    pub sample_spacing_px: f64,
    /// Emit front-facing boundary (single-face) edges as contour.
    #[serde(default = "d_boundary_edges_as_contour")]
    pub boundary_edges_as_contour: bool,
    /// Keypoint tracking fails below this many tracked points.
    #[serde(default = "d_klt_min_points")]
    pub klt_min_points: usize,
    /// Keypoint tracking (and PnP consensus) fails below this inlier rate.
    #[serde(default = "d_min_inlier_rate")]
    pub min_inlier_rate: f64,
    #[serde(default = "d_klt_pyramid_levels")]
    pub klt_pyramid_levels: usize,
    /// Full side length of the square flow window, pixels (odd).
    #[serde(default = "d_klt_window_px")]
    pub klt_window_px: usize,
    #[serde(default = "d_klt_max_iterations")]
    pub klt_max_iterations: usize,
    /// Flow convergence threshold per iteration, pixels.
    #[serde(default = "d_klt_epsilon_px")]
    pub klt_epsilon_px: f64,
    /// Minimum eigenvalue of the flow normal matrix before a track is
    /// declared lost.
    #[serde(default = "d_klt_min_eigenvalue")]
    pub klt_min_eigenvalue: f64,
    /// Maximum mean absolute intensity residual of a converged track.
    #[serde(default = "d_klt_max_residual")]
    pub klt_max_residual: f64,
    /// Maximum number of simultaneously tracked keypoints.
    #[serde(default = "d_corner_max_points")]
    pub corner_max_points: usize,
    /// Corner threshold as a fraction of the strongest response.
    #[serde(default = "d_corner_quality")]
    pub corner_quality: f64,
    /// Non-maximum-suppression radius for corner detection, pixels.
    #[serde(default = "d_corner_nms_radius_px")]
    pub corner_nms_radius_px: f64,
    #[serde(default = "d_ransac_max_iterations")]
    pub ransac_max_iterations: usize,
    #[serde(default = "d_ransac_inlier_threshold_px")]
    pub ransac_inlier_threshold_px: f64,
    /// RANSAC stops sampling once a hypothesis reaches this inlier rate.
    #[serde(default = "d_ransac_early_exit_rate")]
    pub ransac_early_exit_rate: f64,
    /// Basin-Hopping step half-width per Euler angle, degrees.
    #[serde(default = "d_hop_rot_step_deg")]
    pub hop_rot_step_deg: f64,
    /// Basin-Hopping step half-width per translation axis, fraction of
    /// model diameter.
    #[serde(default = "d_hop_trans_step_frac")]
    pub hop_trans_step_frac: f64,
    /// Metropolis temperature; `null` selects the adaptive default
    /// (0.1 × the objective spread over the first hops).
    #[serde(default = "d_temperature")]
    pub temperature: Option<f64>,
    /// Iteration cap of the constrained quasi-Newton local search.
    #[serde(default = "d_local_max_iterations")]
    pub local_max_iterations: usize,
    /// Finite-difference step for rotation coordinates, radians.
    #[serde(default = "d_grad_step_rot_rad")]
    pub grad_step_rot_rad: f64,
    /// Finite-difference step for translation coordinates, fraction of
    /// model diameter.
    #[serde(default = "d_grad_step_trans_frac")]
    pub grad_step_trans_frac: f64,
    /// Hop-schedule overrides; `null` keeps the mesh-size formulas.
    #[serde(default)]
    pub min_hops_override: Option<usize>,
    #[serde(default)]
    pub max_effectless_override: Option<usize>,
    #[serde(default)]
    pub max_hops_override: Option<usize>,
    /// Enable contour-energy refinement (disabled = pure keypoint
    /// tracking).
    #[serde(default = "d_refine")]
    pub refine: bool,
    /// Declare tracking lost after this many consecutive frames whose
    /// refined contour produced zero samples.
    #[serde(default = "d_lost_zero_sample_frames")]
    pub lost_zero_sample_frames: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config maps to defaults")
    }
}

impl Config {
    pub fn theta_sharp(&self) -> f64 {
        self.theta_sharp_deg.to_radians()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_constants() {
        let c = Config::default();
        assert_eq!(c.theta_sharp_deg, 45.0);
        assert_eq!(c.blur_sigma, 1.1);
        assert_eq!(c.e_max_px, 2.5);
        assert_eq!(c.fallback_rot_deg, 30.0);
        assert_eq!(c.fallback_trans_frac, 0.1);
        assert_eq!(c.fallback_trans_z_frac, 0.2);
        assert_eq!(c.icosphere_level, 4);
        assert_eq!(c.final_hops, 5);
        assert_eq!(c.klt_min_points, 8);
        assert_eq!(c.min_inlier_rate, 0.3);
    }

    #[test]
    fn partial_config_keeps_other_defaults() {
        let c: Config = serde_json::from_str(r#"{"blur_sigma": 2.0}"#).unwrap();
        assert_eq!(c.blur_sigma, 2.0);
        assert_eq!(c.theta_sharp_deg, 45.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = serde_json::from_str::<Config>(r#"{"blur_sgima": 2.0}"#);
        assert!(r.is_err());
    }
}
