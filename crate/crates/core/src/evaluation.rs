//! Tracking accuracy metrics: per-frame pose error δ (mean vertex
//! displacement), the success curve over the threshold coefficient k, and
//! its AUC.
//!
//! A frame counts as a success at coefficient `k` when `δ < k·d` with `d`
//! the model diameter. The curve is sampled for `k ∈ [0, 0.2]` and
//! integrated with the trapezoid rule, so the AUC ranges from 0 to 20.
//! The `k = 0` sample uses the right-hand limit (frames with `δ = 0`
//! count), which makes a perfect tracker score exactly 20.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Mesh, Pose};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot evaluate an empty error list")]
    EmptyErrors,
    #[error("need at least 2 curve samples (got {0})")]
    TooFewSamples(usize),
}

pub const MAX_K: f64 = 0.2;
pub const DEFAULT_CURVE_SAMPLES: usize = 201;

/// Mean displacement of the model vertices between two poses.
pub fn pose_error(pose: &Pose, reference: &Pose, mesh: &Mesh) -> f64 {
    let sum: f64 = mesh
        .vertices()
        .iter()
        .map(|v| (pose.transform_point(v) - reference.transform_point(v)).norm())
        .sum();
    sum / mesh.vertices().len() as f64
}

/// Success curve and AUC report.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Per-frame δ errors, model units.
    pub errors: Vec<f64>,
    /// `(k, success percentage)` samples, k ascending over [0, 0.2].
    pub curve: Vec<(f64, f64)>,
    /// Area under the curve, in [0, 20].
    pub auc: f64,
}

/// Builds the success curve over `samples` uniform k values in
/// `[0, 0.2]` and integrates it.
pub fn success_auc(errors: &[f64], diameter: f64, samples: usize) -> Result<EvalReport, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::EmptyErrors);
    }
    if samples < 2 {
        return Err(EvalError::TooFewSamples(samples));
    }
    assert!(diameter > 0.0, "diameter must be positive");

    let n = errors.len() as f64;
    let success_percent = |k: f64| -> f64 {
        let count = errors
            .iter()
            .filter(|&&delta| delta == 0.0 || delta < k * diameter)
            .count();
        100.0 * count as f64 / n
    };

    let curve: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let k = MAX_K * i as f64 / (samples - 1) as f64;
            (k, success_percent(k))
        })
        .collect();

    let mut auc = 0.0;
    for pair in curve.windows(2) {
        let (k0, s0) = pair[0];
        let (k1, s1) = pair[1];
        auc += (k1 - k0) * (s0 + s1) / 2.0;
    }
    Ok(EvalReport {
        errors: errors.to_vec(),
        curve,
        auc,
    })
}
