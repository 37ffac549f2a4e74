//! Visibility-map soundness against a perspective z-buffer oracle.
//!
//! The baked sets are computed from orthographic renders over icosphere
//! directions, so they are approximate under perspective at runtime. The
//! checks here pin the quality of that approximation on desk-scale
//! meshes: almost every face reported invisible must actually be
//! invisible in a full perspective render, and refining the icosphere
//! must not make the approximation worse.

use contrack_core::geometry::{shapes, CameraIntrinsics, Mesh, Pose};
use contrack_core::synth::face_item_buffer;
use contrack_core::visibility::{bake_visibility, build_icosphere, invisible_set_for_pose};
use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_pose(rng: &mut ChaCha8Rng, distance_scale: f64) -> Pose {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let rotation = if axis.norm() < 1e-9 {
        nalgebra::Matrix3::identity()
    } else {
        Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner()
    };
    let translation = Vector3::new(
        rng.random_range(-0.3..0.3) * distance_scale,
        rng.random_range(-0.3..0.3) * distance_scale,
        rng.random_range(4.0..8.0) * distance_scale,
    );
    Pose::from_parts_unchecked(rotation, translation)
}

struct LevelStats {
    set_size: usize,
    perspective_wrong: usize,
    ortho_wrong: usize,
}

fn level_stats(
    mesh: &Mesh,
    level: u32,
    resolution: u32,
    poses: &[Pose],
    k: &CameraIntrinsics,
) -> LevelStats {
    let ico = build_icosphere(level).unwrap();
    let map = bake_visibility(mesh, &ico, resolution);
    let mut stats = LevelStats {
        set_size: 0,
        perspective_wrong: 0,
        ortho_wrong: 0,
    };
    for pose in poses {
        let s = invisible_set_for_pose(pose, &ico, &map).unwrap();
        let buffer = face_item_buffer(mesh, pose, k, (640, 480));
        let mut seen = vec![false; mesh.faces().len()];
        for id in buffer {
            if id != u32::MAX {
                seen[id as usize] = true;
            }
        }
        stats.set_size += s.len();
        stats.perspective_wrong += s.iter().filter(|&&f| seen[f as usize]).count();
        // Reference orthographic render at the exact view direction: the
        // quantity the interpolated sets converge to as the level grows.
        let d = pose.view_direction().unwrap();
        let ortho =
            contrack_core::visibility::invisible_faces_from_direction(mesh, &d, 1024);
        stats.ortho_wrong += s
            .iter()
            .filter(|f| ortho.binary_search(f).is_err())
            .count();
    }
    stats
}

#[test]
fn invisible_sets_are_sound_and_improve_with_level() {
    let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap();
    let meshes = [
        ("cube", shapes::cube(1.0), 1.0),
        ("torus", shapes::torus(1.0, 0.4, 24, 12), 1.4),
    ];
    for (name, mesh, scale) in meshes {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let poses: Vec<Pose> = (0..100).map(|_| random_pose(&mut rng, scale)).collect();

        let mut previous: Option<LevelStats> = None;
        for level in [2u32, 3, 4] {
            let stats = level_stats(&mesh, level, 512, &poses, &k);
            assert!(stats.set_size > 0);
            // Soundness: almost everything reported invisible really is
            // invisible in a full perspective z-buffer render. A small
            // remainder comes from perspective parallax (the bake is
            // orthographic) and sub-pixel coverage.
            let sound = 1.0 - stats.perspective_wrong as f64 / stats.set_size as f64;
            assert!(
                sound >= 0.99,
                "{name} level {level}: only {:.2}% of S truly invisible",
                100.0 * sound
            );
            // Against the orthographic reference the construction is
            // nearly exact at every level.
            let ortho_fraction = stats.ortho_wrong as f64 / stats.set_size as f64;
            assert!(
                ortho_fraction <= 1e-3,
                "{name} level {level}: {:.4}% of S visible orthographically",
                100.0 * ortho_fraction
            );
            // Refinement only grows the sets toward the exact
            // orthographic answer: more invisible faces get culled while
            // the error fractions above stay pinned.
            if let Some(prev) = previous {
                assert!(
                    stats.set_size >= prev.set_size,
                    "{name} level {level}: |S| shrank from {} to {}",
                    prev.set_size,
                    stats.set_size
                );
            }
            previous = Some(stats);
        }
    }
}

#[test]
fn convex_sets_are_exact_at_every_level() {
    // For a convex mesh the intersection of back-facing sets is itself a
    // back-facing set at the looked-up pose, so S never contains a
    // front-facing face.
    let cube = shapes::cube(1.0);
    let ico = build_icosphere(3).unwrap();
    let map = bake_visibility(&cube, &ico, 256);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let pose = random_pose(&mut rng, 1.0);
        let s = invisible_set_for_pose(&pose, &ico, &map).unwrap();
        for &fi in &s {
            let normal = pose.transform_vector(&cube.face_normal(fi as usize));
            let [a, b, c] = cube.face_vertices(fi as usize);
            let center = pose.transform_point(&nalgebra::Point3::from(
                (a.coords + b.coords + c.coords) / 3.0,
            ));
            assert!(
                normal.dot(&center.coords) >= -1e-12,
                "front-facing face {fi} in S"
            );
        }
    }
}
