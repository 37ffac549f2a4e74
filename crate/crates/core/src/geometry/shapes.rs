//! Procedural test meshes with consistent counter-clockwise winding.

use std::collections::HashMap;

use nalgebra::Point3;

use super::Mesh;

/// Axis-aligned cube of the given side length, centered at the origin.
pub fn cube(side: f64) -> Mesh {
    let h = side / 2.0;
    let vertices = vec![
        Point3::new(-h, -h, -h),
        Point3::new(h, -h, -h),
        Point3::new(h, h, -h),
        Point3::new(-h, h, -h),
        Point3::new(-h, -h, h),
        Point3::new(h, -h, h),
        Point3::new(h, h, h),
        Point3::new(-h, h, h),
    ];
    let faces = vec![
        [4, 5, 6],
        [4, 6, 7],
        [0, 2, 1],
        [0, 3, 2],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
        [2, 3, 7],
        [2, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
    ];
    Mesh::new(vertices, faces).expect("cube is a valid mesh")
}

/// Torus around the z axis with the given major/minor radii and grid
/// resolution.
pub fn torus(major_radius: f64, minor_radius: f64, major_segments: u32, minor_segments: u32) -> Mesh {
    assert!(major_segments >= 3 && minor_segments >= 3);
    let nu = major_segments as usize;
    let nv = minor_segments as usize;
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let ring = major_radius + minor_radius * phi.cos();
            vertices.push(Point3::new(
                ring * theta.cos(),
                ring * theta.sin(),
                minor_radius * phi.sin(),
            ));
        }
    }
    let index = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as u32;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([index(i, j), index(i + 1, j), index(i + 1, j + 1)]);
            faces.push([index(i, j), index(i + 1, j + 1), index(i, j + 1)]);
        }
    }
    Mesh::new(vertices, faces).expect("torus is a valid mesh")
}

/// Unit icosphere: a regular icosahedron subdivided `level` times, with
/// every vertex re-normalized onto the unit sphere.
pub fn icosphere(level: u32) -> Mesh {
    let (vertices, levels) = icosphere_with_levels(level);
    Mesh::new(vertices, levels.into_iter().next_back().expect("at least level 0"))
        .expect("icosphere is a valid mesh")
}

/// Icosphere subdivision keeping every intermediate level's face list.
///
/// All levels index into the single returned vertex list (subdivision
/// only appends vertices), and face `i` of level `l` is subdivided into
/// faces `4i..4i+4` of level `l+1` — the invariant the hierarchical
/// point-location in the visibility module relies on.
pub(crate) fn icosphere_with_levels(level: u32) -> (Vec<Point3<f64>>, Vec<Vec<[u32; 3]>>) {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .into_iter()
    .map(|(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();

    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    let mut levels = vec![faces.clone()];
    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Point3<f64>>| -> u32 {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoints.entry(key).or_insert_with(|| {
                let m = (vertices[a as usize].coords + vertices[b as usize].coords) / 2.0;
                vertices.push(Point3::from(m.normalize()));
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
        levels.push(faces.clone());
    }

    (vertices, levels)
}
