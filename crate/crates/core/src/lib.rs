//! Monocular model-based 3D object tracking.
//!
//! The pipeline combines two complementary signals:
//!
//! 1. A sparse keypoint front end (Shi–Tomasi corners, pyramidal
//!    Lucas–Kanade flow, PnP + RANSAC) produces a preliminary pose per
//!    frame.
//! 2. The pose is then refined by maximizing a contour energy — the mean
//!    absolute dot product between the raw image gradient and the normals
//!    of the projected model contour — using constrained Basin-Hopping
//!    with a quasi-Newton local search.
//!
//! Contour extraction avoids per-frame hidden-line rendering by looking up
//! precomputed per-viewpoint invisible-face sets baked over an icosphere
//! of directions.
//!
//! Module map:
//! - [`geometry`] — meshes, rigid poses, camera intrinsics, projection.
//! - [`img`] — grayscale frames, Gaussian blur, gradient fields.
//! - [`visibility`] — icosphere bake and runtime invisible-set lookup.
//! - [`contour`] — contour/sharp edge classification and sampling.
//! - [`energy`] — the contour energy and its numerical pose gradient.
//! - [`keypoints`] — corners, optical flow, 3D anchoring, PnP/RANSAC.
//! - [`optimizer`] — constrained local search and Basin-Hopping.
//! - [`tracker`] — per-frame orchestration and search-area bounds.
//! - [`evaluation`] — pose error, success curve, AUC.
//! - [`synth`] — software renderer and scripted ground-truth sequences.

pub mod config;
pub mod contour;
pub mod energy;
pub mod evaluation;
pub mod geometry;
pub mod img;
pub mod keypoints;
pub mod optimizer;
pub mod synth;
pub mod tracker;
pub mod visibility;
