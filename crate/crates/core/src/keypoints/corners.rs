//! Shi–Tomasi corner detection: minimum eigenvalue of the local
//! structure tensor, thresholded relative to the strongest response,
//! with greedy non-maximum suppression.

use nalgebra::Point2;

use crate::img::{gradient, GrayImage, Mask};

#[derive(Debug, Clone, Copy)]
pub struct CornerParams {
    pub max_points: usize,
    /// Response threshold as a fraction of the maximum response.
    pub quality: f64,
    /// Minimum distance between kept corners, pixels.
    pub nms_radius: f64,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self {
            max_points: 300,
            quality: 0.01,
            nms_radius: 8.0,
        }
    }
}

/// Box-filter radius of the structure-tensor window.
const WINDOW_RADIUS: usize = 2;

/// Detects up to `max_points` corners inside the mask, strongest first.
pub fn detect_corners(img: &GrayImage, mask: &Mask, params: &CornerParams) -> Vec<Point2<f64>> {
    assert_eq!(img.width(), mask.width());
    assert_eq!(img.height(), mask.height());
    let Ok(field) = gradient(img) else {
        return Vec::new();
    };
    let (w, h) = (img.width(), img.height());

    // Structure tensor products, box-summed over the window (separable).
    let mut ixx = vec![0.0f64; w * h];
    let mut ixy = vec![0.0f64; w * h];
    let mut iyy = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let g = field.at(x, y);
            let i = y * w + x;
            ixx[i] = g.x * g.x;
            ixy[i] = g.x * g.y;
            iyy[i] = g.y * g.y;
        }
    }
    let box_sum = |src: &[f64]| -> Vec<f64> {
        let r = WINDOW_RADIUS as isize;
        let mut rows = vec![0.0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dx in -r..=r {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    acc += src[y * w + sx];
                }
                rows[y * w + x] = acc;
            }
        }
        let mut out = vec![0.0f64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in -r..=r {
                    let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    acc += rows[sy * w + x];
                }
                out[y * w + x] = acc;
            }
        }
        out
    };
    let sxx = box_sum(&ixx);
    let sxy = box_sum(&ixy);
    let syy = box_sum(&iyy);

    // Minimum eigenvalue of [[sxx, sxy], [sxy, syy]] per pixel.
    let mut max_response = 0.0f64;
    let mut response = vec![0.0f64; w * h];
    let margin = WINDOW_RADIUS + 1;
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            if !mask.get(x, y) {
                continue;
            }
            let i = y * w + x;
            let half_trace = (sxx[i] + syy[i]) / 2.0;
            let det_part = ((sxx[i] - syy[i]) / 2.0).powi(2) + sxy[i] * sxy[i];
            let lambda_min = half_trace - det_part.sqrt();
            response[i] = lambda_min;
            if lambda_min > max_response {
                max_response = lambda_min;
            }
        }
    }
    if max_response <= 0.0 {
        return Vec::new();
    }

    let threshold = params.quality * max_response;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let r = response[y * w + x];
            if r >= threshold {
                candidates.push((r, y, x));
            }
        }
    }
    // Strongest first; ties broken by position for determinism.
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let radius2 = params.nms_radius * params.nms_radius;
    let mut kept: Vec<Point2<f64>> = Vec::new();
    for &(resp, y, x) in &candidates {
        if kept.len() >= params.max_points {
            break;
        }
        let p = Point2::new(x as f64, y as f64);
        let too_close = kept
            .iter()
            .any(|q| (p - q).norm_squared() < radius2);
        if too_close {
            continue;
        }
        // Response plateaus (exact symmetric corners) tie over several
        // pixels; report the response-weighted centroid of the near-tied
        // candidates around the seed instead of the first plateau pixel.
        const CENTROID_RADIUS2: f64 = 3.0 * 3.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut weight = 0.0;
        for &(r2, y2, x2) in &candidates {
            if r2 >= 0.999 * resp {
                let q = Point2::new(x2 as f64, y2 as f64);
                if (p - q).norm_squared() < CENTROID_RADIUS2 {
                    cx += r2 * q.x;
                    cy += r2 * q.y;
                    weight += r2;
                }
            }
        }
        kept.push(Point2::new(cx / weight, cy / weight));
    }
    kept
}
