//! Shared input loading and the visibility-sidecar reuse logic.

use std::path::{Path, PathBuf};

use contrack_core::config::Config;
use contrack_core::geometry::{io as geo_io, CameraIntrinsics, Mesh, Pose};
use contrack_core::tracker::SceneModel;
use contrack_core::visibility::{
    bake_visibility, build_icosphere,
    sidecar::{mesh_content_hash, read_sidecar, write_sidecar},
};

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing input data (exit code 2).
    Data(String),
    /// The tracker lost the object (exit code 3).
    TrackingLost(String),
}

pub fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

pub fn load_mesh(path: &Path) -> Result<Mesh, CliError> {
    geo_io::load_obj(path).map_err(data_err)
}

pub fn load_camera(path: &Path) -> Result<CameraIntrinsics, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("failed to read {}: {e}", path.display())))?;
    let k: CameraIntrinsics = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("bad camera file {}: {e}", path.display())))?;
    CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy)
        .map_err(|e| CliError::Data(format!("bad camera file {}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("failed to read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("bad config {}: {e}", path.display())))
        }
    }
}

pub fn load_pose_rows(path: &Path) -> Result<Vec<(usize, Pose)>, CliError> {
    geo_io::load_pose_csv(path).map_err(data_err)
}

/// Picks the row with the requested frame id, or the first row.
pub fn pick_pose(rows: &[(usize, Pose)], frame: Option<usize>) -> Result<Pose, CliError> {
    match frame {
        None => Ok(rows[0].1),
        Some(id) => rows
            .iter()
            .find(|(f, _)| *f == id)
            .map(|(_, p)| *p)
            .ok_or_else(|| CliError::Data(format!("no pose row for frame {id}"))),
    }
}

pub fn default_sidecar_path(mesh_path: &Path) -> PathBuf {
    PathBuf::from(format!("{}.cvis", mesh_path.display()))
}

/// Builds the scene, reusing a matching sidecar bake when one exists and
/// writing a fresh one otherwise.
pub fn scene_with_sidecar(
    mesh: Mesh,
    mesh_path: &Path,
    k: CameraIntrinsics,
    config: &Config,
    sidecar_override: Option<&Path>,
) -> Result<SceneModel, CliError> {
    let sidecar_path = sidecar_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_sidecar_path(mesh_path));
    let hash = mesh_content_hash(&mesh);

    if sidecar_path.exists() {
        match read_sidecar(&sidecar_path) {
            Ok((stored_hash, map))
                if stored_hash == hash
                    && map.level() == config.icosphere_level
                    && map.resolution() == config.bake_resolution =>
            {
                let icosphere = build_icosphere(config.icosphere_level).map_err(data_err)?;
                return SceneModel::with_visibility(mesh, k, icosphere, map).map_err(data_err);
            }
            Ok(_) => eprintln!(
                "note: {} does not match this mesh/config, re-baking",
                sidecar_path.display()
            ),
            Err(e) => eprintln!("note: ignoring unreadable sidecar: {e}"),
        }
    }

    let icosphere = build_icosphere(config.icosphere_level).map_err(data_err)?;
    let map = bake_visibility(&mesh, &icosphere, config.bake_resolution);
    if let Err(e) = write_sidecar(&map, &hash, &sidecar_path) {
        eprintln!("note: could not write sidecar: {e}");
    }
    SceneModel::with_visibility(mesh, k, icosphere, map).map_err(data_err)
}

pub fn parse_size(size: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = size.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(w), Ok(h)) = (parts[0].parse(), parts[1].parse()) {
            if w >= 3 && h >= 3 {
                return Ok((w, h));
            }
        }
    }
    Err(CliError::Data(format!(
        "bad size {size:?}, expected WIDTHxHEIGHT"
    )))
}

/// Chart-axis names used by the landscape tool.
pub fn axis_index(name: &str) -> Result<usize, CliError> {
    match name {
        "rx" => Ok(0),
        "ry" => Ok(1),
        "rz" => Ok(2),
        "tx" => Ok(3),
        "ty" => Ok(4),
        "tz" => Ok(5),
        other => Err(CliError::Data(format!(
            "unknown axis {other:?} (expected rx, ry, rz, tx, ty or tz)"
        ))),
    }
}
