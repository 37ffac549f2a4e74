//! Frame I/O: PNG and binary PGM input, PNG output, and printf-style
//! frame sequence patterns.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::GrayImage;

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("unsupported image format for {path}")]
    UnsupportedFormat { path: PathBuf },
    #[error("frame pattern {0:?} contains no %d placeholder")]
    BadPattern(String),
}

/// Loads a PNG or binary PGM frame as a normalized grayscale image.
///
/// RGB input is converted with the luma weights Y = 0.299 R + 0.587 G +
/// 0.114 B; 8-bit values are divided by 255.
pub fn load_frame(path: &Path) -> Result<GrayImage, FrameIoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("pgm") => load_pgm(path),
        Some("png") => load_png(path),
        _ => Err(FrameIoError::UnsupportedFormat {
            path: path.to_path_buf(),
        }),
    }
}

fn load_png(path: &Path) -> Result<GrayImage, FrameIoError> {
    let dynamic = image::open(path).map_err(|e| FrameIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut data = Vec::with_capacity(w * h);
    for p in rgb.pixels() {
        let [r, g, b] = p.0;
        let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
        data.push(y / 255.0);
    }
    GrayImage::new(w, h, data).map_err(|e| FrameIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_pgm(path: &Path) -> Result<GrayImage, FrameIoError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| FrameIoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let decode_err = |message: &str| FrameIoError::Decode {
        path: path.to_path_buf(),
        message: message.to_string(),
    };

    let mut cursor = 0usize;
    let mut next_token = || -> Option<String> {
        // Skip whitespace and `#` comment lines between header tokens.
        loop {
            while cursor < bytes.len() && bytes[cursor].is_ascii_whitespace() {
                cursor += 1;
            }
            if cursor < bytes.len() && bytes[cursor] == b'#' {
                while cursor < bytes.len() && bytes[cursor] != b'\n' {
                    cursor += 1;
                }
                continue;
            }
            break;
        }
        let start = cursor;
        while cursor < bytes.len() && !bytes[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        if start == cursor {
            return None;
        }
        Some(String::from_utf8_lossy(&bytes[start..cursor]).into_owned())
    };

    if next_token().as_deref() != Some("P5") {
        return Err(decode_err("not a binary PGM (missing P5 magic)"));
    }
    let width: usize = next_token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| decode_err("bad width"))?;
    let height: usize = next_token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| decode_err("bad height"))?;
    let maxval: usize = next_token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| decode_err("bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(decode_err("only 8-bit PGM is supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    cursor += 1;
    if bytes.len() < cursor + width * height {
        return Err(decode_err("truncated raster"));
    }
    let data = bytes[cursor..cursor + width * height]
        .iter()
        .map(|&b| b as f64 / maxval as f64)
        .collect();
    GrayImage::new(width, height, data).map_err(|e| decode_err(&e.to_string()))
}

/// Writes an 8-bit grayscale PNG; intensities are clamped to `[0, 1]` and
/// rounded to the nearest of 256 levels.
pub fn save_png(img: &GrayImage, path: &Path) -> Result<(), FrameIoError> {
    let buffer: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let out = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, buffer)
        .expect("buffer sized from image dimensions");
    out.save(path).map_err(|e| FrameIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A printf-style frame path pattern such as `dir/frame_%06d.png`.
#[derive(Debug, Clone)]
pub struct FramePattern {
    prefix: String,
    suffix: String,
    digits: usize,
}

impl FramePattern {
    /// Parses a pattern containing exactly one `%d` or `%0<N>d` placeholder.
    pub fn parse(pattern: &str) -> Result<Self, FrameIoError> {
        let Some(start) = pattern.find('%') else {
            return Err(FrameIoError::BadPattern(pattern.to_string()));
        };
        let rest = &pattern[start + 1..];
        let mut digits = 0usize;
        let mut index = 0usize;
        let chars: Vec<char> = rest.chars().collect();
        if index < chars.len() && chars[index] == '0' {
            index += 1;
            let mut n = String::new();
            while index < chars.len() && chars[index].is_ascii_digit() {
                n.push(chars[index]);
                index += 1;
            }
            digits = n.parse().unwrap_or(0);
        }
        if index >= chars.len() || chars[index] != 'd' {
            return Err(FrameIoError::BadPattern(pattern.to_string()));
        }
        Ok(Self {
            prefix: pattern[..start].to_string(),
            suffix: rest[index + 1..].to_string(),
            digits,
        })
    }

    pub fn path_for(&self, frame: usize) -> PathBuf {
        PathBuf::from(format!(
            "{}{:0width$}{}",
            self.prefix,
            frame,
            self.suffix,
            width = self.digits
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_pattern_formats_indices() {
        let p = FramePattern::parse("seq/frame_%06d.png").unwrap();
        assert_eq!(p.path_for(7), PathBuf::from("seq/frame_000007.png"));
        let plain = FramePattern::parse("f%d.pgm").unwrap();
        assert_eq!(plain.path_for(12), PathBuf::from("f12.pgm"));
        assert!(FramePattern::parse("frame.png").is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = GrayImage::from_fn(9, 7, |x, y| ((x * 13 + y * 29) % 256) as f64 / 255.0);
        save_png(&img, &path).unwrap();
        let back = load_frame(&path).unwrap();
        assert_eq!(back.width(), 9);
        assert_eq!(back.height(), 7);
        for i in 0..img.data().len() {
            assert!((img.data()[i] - back.data()[i]).abs() < 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_loads_with_comment_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let mut bytes = b"P5\n# a comment\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 10, 20, 30]);
        std::fs::write(&path, bytes).unwrap();
        let img = load_frame(&path).unwrap();
        assert_eq!(img.width(), 3);
        assert_eq!(img.height(), 2);
        assert!((img.pixel(1, 0) - 128.0 / 255.0).abs() < 1e-12);
        assert!((img.pixel(2, 1) - 30.0 / 255.0).abs() < 1e-12);
    }
}
