//! Pyramidal Lucas–Kanade sparse optical flow.
//!
//! The spatial gradient matrix is built from the previous frame at the
//! template location once per level; iterations only re-evaluate the
//! temporal difference (Bouguet's formulation).

use nalgebra::{Matrix2, Point2, Vector2};

use crate::img::GrayImage;

#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    pub levels: usize,
    /// Full side of the square tracking window, pixels (odd).
    pub window: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the per-iteration update, pixels.
    pub epsilon: f64,
    /// Tracks fail when the normal matrix's smallest eigenvalue drops
    /// below this.
    pub min_eigenvalue: f64,
    /// Tracks fail when the mean absolute residual after convergence
    /// exceeds this.
    pub max_residual: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            levels: 3,
            window: 15,
            max_iterations: 30,
            epsilon: 0.01,
            min_eigenvalue: 1e-7,
            max_residual: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowResult {
    pub point: Point2<f64>,
    pub ok: bool,
}

fn downsample(img: &GrayImage) -> GrayImage {
    let w = (img.width() / 2).max(1);
    let h = (img.height() / 2).max(1);
    GrayImage::from_fn(w, h, |x, y| {
        let x0 = (2 * x).min(img.width() - 1);
        let x1 = (2 * x + 1).min(img.width() - 1);
        let y0 = (2 * y).min(img.height() - 1);
        let y1 = (2 * y + 1).min(img.height() - 1);
        (img.pixel(x0, y0) + img.pixel(x1, y0) + img.pixel(x0, y1) + img.pixel(x1, y1)) / 4.0
    })
}

fn build_pyramid(img: &GrayImage, levels: usize) -> Vec<GrayImage> {
    let mut pyramid = vec![img.clone()];
    for _ in 1..levels {
        let top = pyramid.last().unwrap();
        if top.width() < 8 || top.height() < 8 {
            break;
        }
        pyramid.push(downsample(top));
    }
    pyramid
}

fn gradient_at(img: &GrayImage, x: f64, y: f64) -> Vector2<f64> {
    Vector2::new(
        (img.sample_clamped(x + 1.0, y) - img.sample_clamped(x - 1.0, y)) / 2.0,
        (img.sample_clamped(x, y + 1.0) - img.sample_clamped(x, y - 1.0)) / 2.0,
    )
}

/// Tracks each point from `prev` to `next`. A result flagged `!ok` means
/// the point left the image, the normal matrix was near-singular, or the
/// converged residual exceeded the threshold.
pub fn track_flow(
    prev: &GrayImage,
    next: &GrayImage,
    points: &[Point2<f64>],
    params: &FlowParams,
) -> Vec<FlowResult> {
    assert_eq!(prev.width(), next.width());
    assert_eq!(prev.height(), next.height());
    let prev_pyramid = build_pyramid(prev, params.levels.max(1));
    let next_pyramid = build_pyramid(next, params.levels.max(1));
    let levels = prev_pyramid.len();

    points
        .iter()
        .map(|p| track_single(&prev_pyramid, &next_pyramid, levels, *p, params))
        .collect()
}

fn track_single(
    prev_pyramid: &[GrayImage],
    next_pyramid: &[GrayImage],
    levels: usize,
    point: Point2<f64>,
    params: &FlowParams,
) -> FlowResult {
    let half = (params.window / 2) as isize;
    let mut displacement = Vector2::new(0.0, 0.0);

    for level in (0..levels).rev() {
        let prev_img = &prev_pyramid[level];
        let next_img = &next_pyramid[level];
        let scale = 1.0 / (1usize << level) as f64;
        let base = Point2::new(point.x * scale, point.y * scale);

        // Template gradients and normal matrix, fixed for this level.
        let mut g = Matrix2::<f64>::zeros();
        let mut grads = Vec::with_capacity((params.window * params.window) as usize);
        for dy in -half..=half {
            for dx in -half..=half {
                let gv = gradient_at(prev_img, base.x + dx as f64, base.y + dy as f64);
                g[(0, 0)] += gv.x * gv.x;
                g[(0, 1)] += gv.x * gv.y;
                g[(1, 0)] += gv.x * gv.y;
                g[(1, 1)] += gv.y * gv.y;
                grads.push(gv);
            }
        }
        let half_trace = (g[(0, 0)] + g[(1, 1)]) / 2.0;
        let det_part = ((g[(0, 0)] - g[(1, 1)]) / 2.0).powi(2) + g[(0, 1)] * g[(0, 1)];
        let lambda_min = half_trace - det_part.sqrt();
        if lambda_min < params.min_eigenvalue {
            return FlowResult { point, ok: false };
        }
        let g_inv = g.try_inverse().expect("eigenvalue check guarantees invertibility");

        for _ in 0..params.max_iterations {
            let warped = base + displacement;
            // Abort when the warped window center leaves the image.
            if warped.x < -(half as f64)
                || warped.y < -(half as f64)
                || warped.x > (next_img.width() - 1) as f64 + half as f64
                || warped.y > (next_img.height() - 1) as f64 + half as f64
            {
                return FlowResult {
                    point: Point2::new(
                        point.x + displacement.x / scale,
                        point.y + displacement.y / scale,
                    ),
                    ok: false,
                };
            }
            let mut b = Vector2::new(0.0, 0.0);
            let mut idx = 0;
            for dy in -half..=half {
                for dx in -half..=half {
                    let tx = base.x + dx as f64;
                    let ty = base.y + dy as f64;
                    let diff = prev_img.sample_clamped(tx, ty)
                        - next_img.sample_clamped(tx + displacement.x, ty + displacement.y);
                    b += grads[idx] * diff;
                    idx += 1;
                }
            }
            let update = g_inv * b;
            if !update.x.is_finite() || !update.y.is_finite() {
                return FlowResult {
                    point,
                    ok: false,
                };
            }
            displacement += update;
            if update.norm() < params.epsilon {
                break;
            }
        }

        if level > 0 {
            displacement *= 2.0;
        }
    }

    let tracked = Point2::new(point.x + displacement.x, point.y + displacement.y);
    let full = &prev_pyramid[0];
    let next_full = &next_pyramid[0];
    if tracked.x < 0.0
        || tracked.y < 0.0
        || tracked.x > (full.width() - 1) as f64
        || tracked.y > (full.height() - 1) as f64
    {
        return FlowResult {
            point: tracked,
            ok: false,
        };
    }

    // Photometric residual over the window at full resolution.
    let mut residual = 0.0;
    let mut count = 0usize;
    for dy in -half..=half {
        for dx in -half..=half {
            let tx = point.x + dx as f64;
            let ty = point.y + dy as f64;
            residual += (full.sample_clamped(tx, ty)
                - next_full.sample_clamped(tx + displacement.x, ty + displacement.y))
            .abs();
            count += 1;
        }
    }
    let ok = residual / count as f64 <= params.max_residual;
    FlowResult { point: tracked, ok }
}
