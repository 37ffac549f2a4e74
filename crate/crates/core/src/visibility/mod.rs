//! Per-viewpoint invisible-face sets.
//!
//! Contour detection must reject self-occluded edges without rendering the
//! model every frame. The bake renders the mesh orthographically from every
//! icosphere vertex direction into an item buffer and stores, per vertex
//! `u`, the set `S_u` of mesh faces invisible from view direction `-u`. At
//! runtime the view direction selects one icosphere face and the lookup
//! returns the intersection of its three vertex sets.

pub mod sidecar;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{shapes, Mesh, Pose};

/// Zero-area threshold for mesh faces during the bake.
const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("icosphere level {0} exceeds the maximum of 6")]
    LevelTooLarge(u32),
    #[error("view direction is undefined (camera at the model origin)")]
    DegenerateView,
    #[error("no icosphere face intersects the view ray")]
    NoFaceHit,
    #[error("visibility map has {map} sets but the icosphere has {icosphere} vertices")]
    MapMismatch { map: usize, icosphere: usize },
}

/// A recursively subdivided icosahedron with unit vertices.
///
/// Every subdivision level's face list is kept: face `i` of level `l`
/// splits into faces `4i..4i+4` of level `l+1`, which makes point
/// location a 20-root, 4-way descent instead of a scan over all faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Icosphere {
    level: u32,
    vertices: Vec<Vector3<f64>>,
    faces_by_level: Vec<Vec<[u32; 3]>>,
}

impl Icosphere {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    /// Faces of the finest level.
    pub fn faces(&self) -> &[[u32; 3]] {
        self.faces_by_level.last().expect("level 0 always present")
    }
}

/// Builds the icosphere at the given subdivision level (`10·4ⁿ+2` vertices,
/// `20·4ⁿ` faces). Levels above 6 are rejected as a memory guard.
pub fn build_icosphere(level: u32) -> Result<Icosphere, VisibilityError> {
    if level > 6 {
        return Err(VisibilityError::LevelTooLarge(level));
    }
    let (vertices, faces_by_level) = shapes::icosphere_with_levels(level);
    Ok(Icosphere {
        level,
        vertices: vertices.iter().map(|p| p.coords).collect(),
        faces_by_level,
    })
}

/// Baked per-icosphere-vertex invisible-face sets (sorted face indices).
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMap {
    level: u32,
    resolution: u32,
    sets: Vec<Vec<u32>>,
}

impl VisibilityMap {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub(crate) fn from_parts(level: u32, resolution: u32, sets: Vec<Vec<u32>>) -> Self {
        Self {
            level,
            resolution,
            sets,
        }
    }
}

/// Orthographic screen basis for view direction `-u`.
fn view_basis(u: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let dir = -u;
    let helper = if dir.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let right = helper.cross(&dir).normalize();
    let up = dir.cross(&right);
    (right, up, dir)
}

/// The set of mesh faces invisible from view direction `-u` under
/// orthographic projection, computed with an item buffer of
/// `resolution²` pixels.
///
/// A face lands in the set when it is back-facing for this direction, has
/// zero area, or is front-facing but wins no pixel in the depth test
/// (fully occluded or thinner than a pixel).
pub fn invisible_faces_from_direction(mesh: &Mesh, u: &Vector3<f64>, resolution: u32) -> Vec<u32> {
    let res = resolution as usize;
    let (right, up, dir) = view_basis(u);
    let extent = mesh.bounding_radius() * 1.01 + 1e-12;

    let mut depth = vec![f64::INFINITY; res * res];
    let mut item = vec![u32::MAX; res * res];

    let num_faces = mesh.faces().len();
    let mut front = vec![false; num_faces];
    let mut degenerate = vec![false; num_faces];

    let to_screen = |p: &Point3<f64>| -> (f64, f64, f64) {
        let sx = p.coords.dot(&right);
        let sy = p.coords.dot(&up);
        let sz = p.coords.dot(&dir);
        (
            (sx + extent) / (2.0 * extent) * res as f64,
            (sy + extent) / (2.0 * extent) * res as f64,
            sz,
        )
    };

    for fi in 0..num_faces {
        let normal = mesh.face_normal(fi);
        if normal.norm() < DEGENERATE_AREA {
            degenerate[fi] = true;
            continue;
        }
        // Outward normal pointing against the view direction means the
        // face shows its front side to this viewpoint.
        front[fi] = normal.dot(&dir) < 0.0;

        let [a, b, c] = mesh.face_vertices(fi);
        let (ax, ay, az) = to_screen(&a);
        let (bx, by, bz) = to_screen(&b);
        let (cx, cy, cz) = to_screen(&c);

        let min_x = ax.min(bx).min(cx).floor().max(0.0) as usize;
        let max_x = (ax.max(bx).max(cx).ceil() as usize).min(res.saturating_sub(1));
        let min_y = ay.min(by).min(cy).floor().max(0.0) as usize;
        let max_y = (ay.max(by).max(cy).ceil() as usize).min(res.saturating_sub(1));

        let area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if area.abs() < 1e-12 {
            continue; // edge-on sliver: covers nothing
        }
        let inv_area = 1.0 / area;

        for py in min_y..=max_y {
            let y = py as f64 + 0.5;
            for px in min_x..=max_x {
                let x = px as f64 + 0.5;
                let w0 = ((bx - ax) * (y - ay) - (by - ay) * (x - ax)) * inv_area;
                let w1 = ((cx - bx) * (y - by) - (cy - by) * (x - bx)) * inv_area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                // Barycentric weights: w0 belongs to c, w1 to a, w2 to b.
                let z = w1 * az + w2 * bz + w0 * cz;
                let idx = py * res + px;
                if z < depth[idx] {
                    depth[idx] = z;
                    item[idx] = fi as u32;
                }
            }
        }
    }

    let mut covered = vec![false; num_faces];
    for &fi in &item {
        if fi != u32::MAX {
            covered[fi as usize] = true;
        }
    }

    (0..num_faces)
        .filter(|&fi| degenerate[fi] || !front[fi] || !covered[fi])
        .map(|fi| fi as u32)
        .collect()
}

/// Bakes the invisible-face sets for every icosphere vertex.
///
/// The mesh pivot must sit at the origin (the icosphere and the model
/// share their center). Vertices are processed in parallel; the result is
/// identical regardless of thread count.
pub fn bake_visibility(mesh: &Mesh, ico: &Icosphere, resolution: u32) -> VisibilityMap {
    let sets: Vec<Vec<u32>> = ico
        .vertices
        .par_iter()
        .map(|u| invisible_faces_from_direction(mesh, u, resolution))
        .collect();
    VisibilityMap {
        level: ico.level,
        resolution,
        sets,
    }
}

/// Intersection of two sorted, deduplicated index lists.
fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// How centrally the ray from the origin along `dir` pierces a spherical
/// triangle: the smallest barycentric coordinate of the intersection
/// (non-negative exactly when the ray passes through the triangle).
fn piercing_score(ico: &Icosphere, face: &[u32; 3], dir: &Vector3<f64>) -> f64 {
    let a = ico.vertices[face[0] as usize];
    let e1 = ico.vertices[face[1] as usize] - a;
    let e2 = ico.vertices[face[2] as usize] - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-12 {
        return f64::NEG_INFINITY;
    }
    let inv_det = 1.0 / det;
    let tvec = -a;
    let u = tvec.dot(&pvec) * inv_det;
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    let t = e2.dot(&qvec) * inv_det;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    u.min(v).min(1.0 - u - v)
}

/// Finds the finest-level face whose spherical triangle contains `dir`:
/// scan the 20 root faces, then descend to the best of 4 children per
/// level. Ties on shared edges resolve to the first candidate, so the
/// result is deterministic.
fn face_containing_direction(ico: &Icosphere, dir: &Vector3<f64>) -> Option<usize> {
    let argmax = |faces: &[[u32; 3]], base: usize| -> Option<usize> {
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for (i, face) in faces.iter().enumerate() {
            let score = piercing_score(ico, face, dir);
            if score > best_score {
                best_score = score;
                best = Some(base + i);
            }
        }
        best.filter(|_| best_score > f64::NEG_INFINITY)
    };
    let mut index = argmax(&ico.faces_by_level[0], 0)?;
    for level in 1..ico.faces_by_level.len() {
        let children = &ico.faces_by_level[level][4 * index..4 * index + 4];
        index = argmax(children, 4 * index)?;
    }
    Some(index)
}

/// The invisible-face set for the given pose: the intersection of the
/// baked sets of the three icosphere vertices spanning the face hit by the
/// model-frame view ray.
pub fn invisible_set_for_pose(
    pose: &Pose,
    ico: &Icosphere,
    map: &VisibilityMap,
) -> Result<Vec<u32>, VisibilityError> {
    if map.sets.len() != ico.vertices.len() {
        return Err(VisibilityError::MapMismatch {
            map: map.sets.len(),
            icosphere: ico.vertices.len(),
        });
    }
    let dir = pose.view_direction().ok_or(VisibilityError::DegenerateView)?;
    let fi = face_containing_direction(ico, &dir).ok_or(VisibilityError::NoFaceHit)?;
    let [a, b, c] = ico.faces()[fi];
    let ab = intersect_sorted(&map.sets[a as usize], &map.sets[b as usize]);
    Ok(intersect_sorted(&ab, &map.sets[c as usize]))
}
