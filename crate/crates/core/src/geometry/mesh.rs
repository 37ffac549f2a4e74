//! Triangle meshes with counter-clockwise winding.

use nalgebra::{Point3, Vector3};

use super::GeometryError;

/// A triangle mesh: vertex positions plus vertex-index triplets.
///
/// Faces are wound counter-clockwise when seen from their front side, so
/// `(b - a) × (c - a)` points outward for a face `(a, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 || faces.is_empty() {
            return Err(GeometryError::MeshTooSmall {
                vertices: vertices.len(),
                faces: faces.len(),
            });
        }
        for (fi, face) in faces.iter().enumerate() {
            for &index in face {
                if index as usize >= vertices.len() {
                    return Err(GeometryError::FaceIndexOutOfRange {
                        face: fi,
                        index,
                        vertices: vertices.len(),
                    });
                }
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_vertices(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Outward face normal, not normalized. Zero for degenerate faces.
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a))
    }

    /// Maximum pairwise vertex distance.
    ///
    /// Exact O(n²) scan; the paper-facing metrics compare against vertex
    /// displacements, so the vertex diameter (not a bounding-box diagonal)
    /// is the right scale.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                let d2 = (self.vertices[i] - self.vertices[j]).norm_squared();
                if d2 > best {
                    best = d2;
                }
            }
        }
        best.sqrt()
    }

    /// Radius of the smallest origin-centered ball containing all vertices.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.coords.norm())
            .fold(0.0, f64::max)
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, v| acc + v.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn rejects_out_of_range_face_index() {
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let err = Mesh::new(vertices, vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, GeometryError::FaceIndexOutOfRange { .. }));
    }

    #[test]
    fn rejects_too_small() {
        let vertices = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        assert!(Mesh::new(vertices, vec![[0, 1, 0]]).is_err());
    }

    #[test]
    fn unit_cube_diameter_is_sqrt_3() {
        let cube = shapes::cube(1.0);
        assert!((cube.diameter() - 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn right_triangle_diameter_is_hypotenuse() {
        let mesh = Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(3.0, 0.0, 0.0),
                Point3::new(0.0, 4.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((mesh.diameter() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn icosphere_mesh_diameter_is_two() {
        // The icosahedron has antipodal vertex pairs, so the unit icosphere
        // has vertex diameter exactly 2.
        let sphere = shapes::icosphere(2);
        assert!((sphere.diameter() - 2.0).abs() < 1e-6);
    }
}
