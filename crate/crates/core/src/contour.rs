//! Contour and sharp edge detection, and contour sampling.
//!
//! For an edge `pq` with adjacent faces `(v1, q, p)` and `(v2, p, q)`
//! (consistent counter-clockwise winding), in camera-frame coordinates:
//!
//! - the edge lies on the contour when exactly one face shows its front
//!   side to the camera and that face is not in the invisible set;
//! - the edge is sharp when both faces are front and visible and their
//!   dihedral angle is at most `θ_sharp`.
//!
//! The sharpness test uses the signed normalized dot of the two outward
//! normals: `arccos(n̂1·n̂2) ≥ π - θ_sharp`. Coplanar faces (dihedral π)
//! are therefore never sharp.

use nalgebra::{Point2, Point3, Vector2};
use thiserror::Error;

use crate::geometry::{project_camera_point, CameraIntrinsics, Mesh, Pose, MIN_DEPTH};

/// Face normals shorter than this make an edge degenerate.
const DEGENERATE_NORMAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ContourError {
    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: u32, b: u32 },
    #[error("edge ({a}, {b}) is traversed twice in the same direction (inconsistent winding)")]
    InconsistentWinding { a: u32, b: u32 },
    #[error("every contour sample fell outside the image domain")]
    AllSamplesClipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Contour,
    Sharp,
    Other,
}

/// One unique mesh edge with its adjacent faces.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoint vertex indices; `faces.0` traverses the edge as `q -> p`,
    /// `faces.1` as `p -> q`.
    pub p: u32,
    pub q: u32,
    /// `(opposite vertex, face index)` for the face winding `(v1, q, p)`.
    pub face1: Option<(u32, u32)>,
    /// `(opposite vertex, face index)` for the face winding `(v2, p, q)`.
    pub face2: Option<(u32, u32)>,
}

/// Unique-edge table for a mesh, built once and reused for every pose.
#[derive(Debug, Clone)]
pub struct EdgeAdjacency {
    edges: Vec<Edge>,
}

impl EdgeAdjacency {
    pub fn build(mesh: &Mesh) -> Result<Self, ContourError> {
        use std::collections::BTreeMap;
        let mut table: BTreeMap<(u32, u32), Edge> = BTreeMap::new();
        for (fi, face) in mesh.faces().iter().enumerate() {
            let fi = fi as u32;
            for corner in 0..3 {
                let from = face[corner];
                let to = face[(corner + 1) % 3];
                let opposite = face[(corner + 2) % 3];
                let key = (from.min(to), from.max(to));
                let entry = table.entry(key).or_insert(Edge {
                    p: key.0,
                    q: key.1,
                    face1: None,
                    face2: None,
                });
                if (from, to) == key {
                    // Traverses p -> q: this is the `(v2, p, q)` side.
                    if entry.face2.is_some() {
                        return Err(ContourError::InconsistentWinding { a: key.0, b: key.1 });
                    }
                    entry.face2 = Some((opposite, fi));
                } else {
                    if entry.face1.is_some() {
                        return Err(ContourError::InconsistentWinding { a: key.0, b: key.1 });
                    }
                    entry.face1 = Some((opposite, fi));
                }
            }
        }
        Ok(Self {
            edges: table.into_values().collect(),
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Classifies one two-face edge from camera-frame geometry.
///
/// `v1`/`v2` are the opposite vertices of the faces `(v1, q, p)` and
/// `(v2, p, q)`. Degenerate faces (normal below 1e-12) yield `Other`.
pub fn classify_edge(
    v1: &Point3<f64>,
    v2: &Point3<f64>,
    p: &Point3<f64>,
    q: &Point3<f64>,
    face1_invisible: bool,
    face2_invisible: bool,
    theta_sharp: f64,
) -> EdgeClass {
    let n1 = (q - v1).cross(&(p - v1));
    let n2 = (p - v2).cross(&(q - v2));
    if n1.norm() < DEGENERATE_NORMAL || n2.norm() < DEGENERATE_NORMAL {
        return EdgeClass::Other;
    }
    // A face is front when its outward normal points toward the camera at
    // the origin: x·n < 0 for any x on the face plane.
    let front1 = v1.coords.dot(&n1) < 0.0;
    let front2 = v2.coords.dot(&n2) < 0.0;

    let contour = (front1 && !front2 && !face1_invisible)
        || (front2 && !front1 && !face2_invisible);
    if contour {
        return EdgeClass::Contour;
    }
    if front1 && front2 && !face1_invisible && !face2_invisible {
        let cos = (n1.normalize().dot(&n2.normalize())).clamp(-1.0, 1.0);
        if cos.acos() >= std::f64::consts::PI - theta_sharp {
            return EdgeClass::Sharp;
        }
    }
    EdgeClass::Other
}

/// A camera-frame edge segment tagged with its class.
#[derive(Debug, Clone, Copy)]
pub struct ContourSegment {
    pub a: Point3<f64>,
    pub b: Point3<f64>,
    pub class: EdgeClass,
}

/// Detects all contour and sharp edges of a mesh at a pose.
///
/// `invisible` is a sorted face-index set from the visibility lookup.
/// Boundary edges (single adjacent face) are emitted as contour when the
/// face is front and visible and `boundary_as_contour` is set; the
/// two-face rule cannot apply to them.
pub fn detect_contours(
    mesh: &Mesh,
    adjacency: &EdgeAdjacency,
    pose: &Pose,
    invisible: &[u32],
    theta_sharp: f64,
    boundary_as_contour: bool,
) -> Vec<ContourSegment> {
    let camera_vertices: Vec<Point3<f64>> = mesh
        .vertices()
        .iter()
        .map(|v| pose.transform_point(v))
        .collect();
    let is_invisible = |face: u32| invisible.binary_search(&face).is_ok();

    let mut segments = Vec::new();
    for edge in adjacency.edges() {
        let p = &camera_vertices[edge.p as usize];
        let q = &camera_vertices[edge.q as usize];
        let class = match (edge.face1, edge.face2) {
            (Some((v1, f1)), Some((v2, f2))) => classify_edge(
                &camera_vertices[v1 as usize],
                &camera_vertices[v2 as usize],
                p,
                q,
                is_invisible(f1),
                is_invisible(f2),
                theta_sharp,
            ),
            (one_face, None) | (None, one_face) => {
                let Some((v, f)) = one_face else { continue };
                if !boundary_as_contour || is_invisible(f) {
                    continue;
                }
                // Recover the face's own winding to compute its front flag:
                // face1 keys (v, q, p), face2 keys (v, p, q).
                let v = &camera_vertices[v as usize];
                let n = if edge.face1.is_some() {
                    (q - v).cross(&(p - v))
                } else {
                    (p - v).cross(&(q - v))
                };
                if n.norm() >= DEGENERATE_NORMAL && v.coords.dot(&n) < 0.0 {
                    EdgeClass::Contour
                } else {
                    EdgeClass::Other
                }
            }
        };
        if class != EdgeClass::Other {
            segments.push(ContourSegment {
                a: *p,
                b: *q,
                class,
            });
        }
    }
    segments
}

/// Contour sample points with unit normals, in pixels.
#[derive(Debug, Clone, Default)]
pub struct ContourSamples {
    pub points: Vec<Point2<f64>>,
    pub normals: Vec<Vector2<f64>>,
}

impl ContourSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-segment in-domain sample counts under the rules of
/// [`sample_contour`]; skipped segments report zero. Two poses with the
/// same counts share one smooth piece of the discretized energy, which
/// makes this the discretization signature used to detect sample-set
/// changes between nearby poses.
pub fn per_segment_sample_counts(
    segments: &[ContourSegment],
    k: &CameraIntrinsics,
    spacing: f64,
    domain: (usize, usize),
) -> Vec<u32> {
    let (width, height) = domain;
    let max_x = (width - 1) as f64;
    let max_y = (height - 1) as f64;
    segments
        .iter()
        .map(|segment| {
            if segment.a.z <= MIN_DEPTH || segment.b.z <= MIN_DEPTH {
                return 0;
            }
            let pa = project_camera_point(k, &segment.a).expect("depth checked");
            let pb = project_camera_point(k, &segment.b).expect("depth checked");
            let delta = pb - pa;
            let length = delta.norm();
            if length < 1e-12 {
                return 0;
            }
            let count = (length / spacing).ceil().max(1.0) as usize;
            let mut in_domain = 0u32;
            for i in 0..count {
                let t = (i as f64 + 0.5) / count as f64;
                let point = pa + delta * t;
                if point.x >= 0.0 && point.x <= max_x && point.y >= 0.0 && point.y <= max_y {
                    in_domain += 1;
                }
            }
            in_domain
        })
        .collect()
}

/// Samples the projected segments uniformly, `⌈L/spacing⌉` samples per
/// segment placed at sub-segment midpoints (a segment shorter than the
/// spacing yields one sample at its midpoint).
///
/// The normal is the left-hand unit perpendicular of the projected segment
/// direction; the sign is irrelevant to the energy, which takes an
/// absolute value. Samples outside `[0, w-1] × [0, h-1]` are dropped;
/// segments with an endpoint at or behind the camera are skipped.
pub fn sample_contour(
    segments: &[ContourSegment],
    k: &CameraIntrinsics,
    spacing: f64,
    domain: (usize, usize),
) -> Result<ContourSamples, ContourError> {
    assert!(spacing > 0.0, "sample spacing must be positive");
    let (width, height) = domain;
    let max_x = (width - 1) as f64;
    let max_y = (height - 1) as f64;

    let mut samples = ContourSamples::default();
    for segment in segments {
        if segment.a.z <= MIN_DEPTH || segment.b.z <= MIN_DEPTH {
            continue;
        }
        let pa = project_camera_point(k, &segment.a).expect("depth checked above");
        let pb = project_camera_point(k, &segment.b).expect("depth checked above");
        let delta = pb - pa;
        let length = delta.norm();
        if length < 1e-12 {
            continue;
        }
        let direction = delta / length;
        let normal = Vector2::new(-direction.y, direction.x);
        let count = (length / spacing).ceil().max(1.0) as usize;
        for i in 0..count {
            let t = (i as f64 + 0.5) / count as f64;
            let point = pa + delta * t;
            if point.x >= 0.0 && point.x <= max_x && point.y >= 0.0 && point.y <= max_y {
                samples.points.push(point);
                samples.normals.push(normal);
            }
        }
    }
    if samples.is_empty() {
        return Err(ContourError::AllSamplesClipped);
    }
    Ok(samples)
}
