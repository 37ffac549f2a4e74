//! Binary sidecar files for baked visibility maps.
//!
//! Layout: magic `CVIS`, version `u32`, mesh content hash (32 bytes),
//! subdivision level `u32`, bake resolution `u32`, then one
//! varint-delta-encoded sorted face-id list per icosphere vertex. All
//! integers are little-endian; varints are unsigned LEB128.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::VisibilityMap;
use crate::geometry::Mesh;

const MAGIC: &[u8; 4] = b"CVIS";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} is not a visibility sidecar (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path} has unsupported version {version}")]
    BadVersion { path: PathBuf, version: u32 },
    #[error("{path} is truncated or corrupt")]
    Corrupt { path: PathBuf },
}

/// Content hash of a mesh: SHA-256 over vertex coordinates and face
/// indices in a fixed little-endian layout.
pub fn mesh_content_hash(mesh: &Mesh) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((mesh.vertices().len() as u64).to_le_bytes());
    for v in mesh.vertices() {
        hasher.update(v.x.to_le_bytes());
        hasher.update(v.y.to_le_bytes());
        hasher.update(v.z.to_le_bytes());
    }
    hasher.update((mesh.faces().len() as u64).to_le_bytes());
    for f in mesh.faces() {
        for index in f {
            hasher.update(index.to_le_bytes());
        }
    }
    hasher.finalize().into()
}

fn push_varint(out: &mut Vec<u8>, mut value: u64) {
    while value >= 0x80 {
        out.push((value & 0x7f) as u8 | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

fn read_varint(bytes: &[u8], cursor: &mut usize) -> Option<u64> {
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let byte = *bytes.get(*cursor)?;
        *cursor += 1;
        value |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Some(value);
        }
        shift += 7;
        if shift > 63 {
            return None;
        }
    }
}

pub fn encode(map: &VisibilityMap, mesh_hash: &[u8; 32]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(mesh_hash);
    out.extend_from_slice(&map.level().to_le_bytes());
    out.extend_from_slice(&map.resolution().to_le_bytes());
    for set in map.sets() {
        push_varint(&mut out, set.len() as u64);
        let mut previous = 0u32;
        for (i, &id) in set.iter().enumerate() {
            let delta = if i == 0 { id } else { id - previous };
            push_varint(&mut out, delta as u64);
            previous = id;
        }
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<([u8; 32], VisibilityMap), SidecarError> {
    let corrupt = || SidecarError::Corrupt {
        path: path.to_path_buf(),
    };
    if bytes.len() < 4 + 4 + 32 + 4 + 4 {
        return Err(corrupt());
    }
    if &bytes[..4] != MAGIC {
        return Err(SidecarError::BadMagic {
            path: path.to_path_buf(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SidecarError::BadVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let mut hash = [0u8; 32];
    hash.copy_from_slice(&bytes[8..40]);
    let level = u32::from_le_bytes(bytes[40..44].try_into().unwrap());
    let resolution = u32::from_le_bytes(bytes[44..48].try_into().unwrap());

    let vertex_count = 10 * 4usize.pow(level) + 2;
    let mut cursor = 48usize;
    let mut sets = Vec::with_capacity(vertex_count);
    for _ in 0..vertex_count {
        let len = read_varint(bytes, &mut cursor).ok_or_else(corrupt)? as usize;
        let mut set = Vec::with_capacity(len);
        let mut current = 0u32;
        for i in 0..len {
            let delta = read_varint(bytes, &mut cursor).ok_or_else(corrupt)?;
            let delta = u32::try_from(delta).map_err(|_| corrupt())?;
            current = if i == 0 {
                delta
            } else {
                current.checked_add(delta).ok_or_else(corrupt)?
            };
            set.push(current);
        }
        sets.push(set);
    }
    if cursor != bytes.len() {
        return Err(corrupt());
    }
    Ok((hash, VisibilityMap::from_parts(level, resolution, sets)))
}

pub fn write_sidecar(
    map: &VisibilityMap,
    mesh_hash: &[u8; 32],
    path: &Path,
) -> Result<(), SidecarError> {
    fs::write(path, encode(map, mesh_hash)).map_err(|source| SidecarError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_sidecar(path: &Path) -> Result<([u8; 32], VisibilityMap), SidecarError> {
    let bytes = fs::read(path).map_err(|source| SidecarError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes, path)
}
