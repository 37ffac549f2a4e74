//! Sparse keypoint front end: Shi–Tomasi corners, pyramidal Lucas–Kanade
//! optical flow, 3D anchoring on the mesh surface, and PnP + RANSAC pose
//! estimation with its failure predicate.

mod anchor;
mod corners;
mod flow;
mod pnp;

pub use anchor::{anchor_points, TrackedPoint};
pub use corners::{detect_corners, CornerParams};
pub use flow::{track_flow, FlowParams, FlowResult};
pub use pnp::{
    avg_reproj_error, klt_failed, refine_pose_gauss_newton, solve_pnp_ransac, PnPParams,
    PnPResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KeypointError {
    #[error("PnP needs at least 4 correspondences (got {got})")]
    TooFewPoints { got: usize },
    #[error("RANSAC found no consensus (best inlier rate {best_rate:.3})")]
    NoConsensus { best_rate: f64 },
}
