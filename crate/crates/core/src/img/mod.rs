//! Grayscale frames, Gaussian blur, gradient fields, and sub-pixel lookup.
//!
//! Intensities are stored as `f64` in `[0, 1]` (8-bit inputs divided by
//! 255), which keeps energy magnitudes independent of input bit depth.

pub mod io;

use nalgebra::{Point2, Vector2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions {width}x{height} do not match buffer of {len} values")]
    DimensionMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("image must be at least 3x3 for gradients (got {width}x{height})")]
    ImageTooSmall { width: usize, height: usize },
    #[error("point ({x}, {y}) lies outside the image domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("blur sigma must be positive (got {0})")]
    InvalidSigma(f64),
}

/// A row-major grayscale frame with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::DimensionMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }

    /// Nearest pixel with coordinates clamped to the image rectangle.
    #[inline]
    pub fn pixel_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.pixel(xc, yc)
    }

    /// Bilinear intensity lookup with border clamping, defined everywhere.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let xf = x.floor();
        let yf = y.floor();
        let tx = x - xf;
        let ty = y - yf;
        let x0 = xf as isize;
        let y0 = yf as isize;
        let v00 = self.pixel_clamped(x0, y0);
        let v10 = self.pixel_clamped(x0 + 1, y0);
        let v01 = self.pixel_clamped(x0, y0 + 1);
        let v11 = self.pixel_clamped(x0 + 1, y0 + 1);
        (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty
    }
}

/// A binary mask with the same layout as [`GrayImage`].
#[derive(Debug, Clone)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::DimensionMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Separable Gaussian blur with kernel radius `⌈3σ⌉` and replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage, ImageError> {
    if sigma <= 0.0 {
        return Err(ImageError::InvalidSigma(sigma));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (img.width, img.height);

    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = x as isize + ki as isize - radius;
                acc += k * img.pixel_clamped(sx, y as isize);
            }
            rows[y * w + x] = acc;
        }
    }
    let rows = GrayImage {
        width: w,
        height: h,
        data: rows,
    };

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = y as isize + ki as isize - radius;
                acc += k * rows.pixel_clamped(x as isize, sy);
            }
            out[y * w + x] = acc;
        }
    }
    Ok(GrayImage {
        width: w,
        height: h,
        data: out,
    })
}

/// Per-pixel partial derivatives of an intensity image.
#[derive(Debug, Clone)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Vector2<f64> {
        let i = y * self.width + x;
        Vector2::new(self.gx[i], self.gy[i])
    }

    /// Bilinear interpolation of both components; the point must lie inside
    /// `[0, width-1] × [0, height-1]`.
    pub fn sample_bilinear(&self, p: &Point2<f64>) -> Result<Vector2<f64>, ImageError> {
        if !(p.x >= 0.0
            && p.x <= (self.width - 1) as f64
            && p.y >= 0.0
            && p.y <= (self.height - 1) as f64)
        {
            return Err(ImageError::OutOfDomain { x: p.x, y: p.y });
        }
        // Clamp the base cell so x0+1/y0+1 stay in range at the far border.
        let x0 = (p.x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (p.y.floor() as usize).min(self.height.saturating_sub(2));
        let tx = p.x - x0 as f64;
        let ty = p.y - y0 as f64;
        let lerp = |v: &[f64]| -> f64 {
            let i = |x: usize, y: usize| y * self.width + x;
            let v00 = v[i(x0, y0)];
            let v10 = v[i(x0 + 1, y0)];
            let v01 = v[i(x0, y0 + 1)];
            let v11 = v[i(x0 + 1, y0 + 1)];
            (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty
        };
        Ok(Vector2::new(lerp(&self.gx), lerp(&self.gy)))
    }
}

/// Central-difference gradient field; one-sided differences at the borders.
pub fn gradient(img: &GrayImage) -> Result<GradientField, ImageError> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(ImageError::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if x == 0 {
                img.pixel(1, y) - img.pixel(0, y)
            } else if x == w - 1 {
                img.pixel(w - 1, y) - img.pixel(w - 2, y)
            } else {
                (img.pixel(x + 1, y) - img.pixel(x - 1, y)) / 2.0
            };
            gy[i] = if y == 0 {
                img.pixel(x, 1) - img.pixel(x, 0)
            } else if y == h - 1 {
                img.pixel(x, h - 1) - img.pixel(x, h - 2)
            } else {
                (img.pixel(x, y + 1) - img.pixel(x, y - 1)) / 2.0
            };
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
    })
}
