//! Mesh and pose file formats.
//!
//! Meshes use an OBJ subset: `v x y z` vertex lines and `f i j k`
//! triangle lines with 1-based indices. Faces with more than three
//! indices are rejected; any other line kind is ignored.
//!
//! Poses travel as CSV rows `frame,r00,r01,r02,r10,...,r22,tx,ty,tz`
//! (row-major rotation, then translation).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Point3, Vector3};
use thiserror::Error;

use super::{Mesh, Pose};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid mesh in {path}: {message}")]
    InvalidMesh { path: PathBuf, message: String },
    #[error("{path} contains no pose rows")]
    EmptyPoseFile { path: PathBuf },
}

pub fn load_obj(path: &Path) -> Result<Mesh, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_obj(&text, path)
}

fn parse_obj(text: &str, path: &Path) -> Result<Mesh, FormatError> {
    let err = |line: usize, message: String| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coord = |name: &str| -> Result<f64, FormatError> {
                    tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, format!("bad vertex {name} coordinate")))
                };
                let x = coord("x")?;
                let y = coord("y")?;
                let z = coord("z")?;
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let indices: Vec<&str> = tokens.collect();
                if indices.len() != 3 {
                    return Err(err(
                        line,
                        format!("only triangle faces are supported (got {} indices)", indices.len()),
                    ));
                }
                let mut face = [0u32; 3];
                for (slot, token) in face.iter_mut().zip(&indices) {
                    // Tolerate `i/t/n` references by using the vertex index.
                    let vertex = token.split('/').next().unwrap_or("");
                    let index: i64 = vertex
                        .parse()
                        .map_err(|_| err(line, format!("bad face index {token:?}")))?;
                    if index < 1 {
                        return Err(err(line, format!("face indices are 1-based (got {index})")));
                    }
                    *slot = (index - 1) as u32;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces).map_err(|e| FormatError::InvalidMesh {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn save_obj(mesh: &Mesh, path: &Path) -> Result<(), FormatError> {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    fs::write(path, out).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const POSE_CSV_HEADER: &str = "frame,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz";

/// Serializes `(frame, pose)` rows, header first.
pub fn pose_csv_to_string(rows: &[(usize, Pose)]) -> String {
    let mut out = String::from(POSE_CSV_HEADER);
    out.push('\n');
    for (frame, pose) in rows {
        let r = pose.rotation();
        let t = pose.translation();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            frame,
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z
        ));
    }
    out
}

pub fn save_pose_csv(rows: &[(usize, Pose)], path: &Path) -> Result<(), FormatError> {
    fs::write(path, pose_csv_to_string(rows)).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a pose CSV; a leading header row is optional.
pub fn load_pose_csv(path: &Path) -> Result<Vec<(usize, Pose)>, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let err = |line: usize, message: String| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if li == 0 && fields.first().map(|f| f.parse::<usize>().is_err()) == Some(true) {
            continue; // header
        }
        if fields.len() != 13 {
            return Err(err(line, format!("expected 13 fields, got {}", fields.len())));
        }
        let frame: usize = fields[0]
            .parse()
            .map_err(|_| err(line, format!("bad frame index {:?}", fields[0])))?;
        let mut values = [0.0f64; 12];
        for (slot, field) in values.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| err(line, format!("bad number {field:?}")))?;
        }
        let rotation = Matrix3::new(
            values[0], values[1], values[2], values[3], values[4], values[5], values[6],
            values[7], values[8],
        );
        let translation = Vector3::new(values[9], values[10], values[11]);
        let pose = Pose::new(rotation, translation)
            .map_err(|e| err(line, format!("invalid pose: {e}")))?;
        rows.push((frame, pose));
    }
    if rows.is_empty() {
        return Err(FormatError::EmptyPoseFile {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}
