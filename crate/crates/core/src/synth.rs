//! Synthetic ground truth: a small z-buffered software renderer and
//! scripted camera/object motions for building desk-scale test sequences
//! with exact pose annotations.
//!
//! The renderer is deliberately minimal — flat Lambertian shading,
//! procedural albedo, optional 2× supersampling — because the fixtures
//! need controllable, analyzable edges rather than realism.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::geometry::{CameraIntrinsics, Mesh, Pose, PoseChart, PoseParams};
use crate::img::{GrayImage, Mask};

/// Near-plane depth below which triangles are skipped entirely.
const NEAR_PLANE: f64 = 1e-3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn cell_noise(ix: i64, iy: i64, iz: i64, seed: u64) -> f64 {
    let h = splitmix64(
        seed ^ (ix as u64).wrapping_mul(0x9e3779b97f4a7c15)
            ^ (iy as u64).wrapping_mul(0xc2b2ae3d27d4eb4f)
            ^ (iz as u64).wrapping_mul(0x165667b19e3779f9),
    );
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Surface albedo as a function of the model-frame position.
#[derive(Debug, Clone, Copy)]
pub enum Albedo {
    Flat(f64),
    /// 3D checkerboard in model units.
    Checker { scale: f64, bright: f64, dark: f64 },
    /// Blocky value noise in model units.
    Noise {
        seed: u64,
        scale: f64,
        min: f64,
        max: f64,
    },
}

impl Albedo {
    fn at(&self, p: &Point3<f64>) -> f64 {
        match *self {
            Albedo::Flat(v) => v,
            Albedo::Checker {
                scale,
                bright,
                dark,
            } => {
                let parity = ((p.x / scale).floor() + (p.y / scale).floor()
                    + (p.z / scale).floor()) as i64;
                if parity.rem_euclid(2) == 0 {
                    bright
                } else {
                    dark
                }
            }
            Albedo::Noise {
                seed,
                scale,
                min,
                max,
            } => {
                let v = cell_noise(
                    (p.x / scale).floor() as i64,
                    (p.y / scale).floor() as i64,
                    (p.z / scale).floor() as i64,
                    seed,
                );
                min + (max - min) * v
            }
        }
    }
}

/// Background intensity as a function of the pixel position.
#[derive(Debug, Clone, Copy)]
pub enum Background {
    Flat(f64),
    /// Diagonal linear ramp from `from` (top-left) to `to` (bottom-right).
    Gradient { from: f64, to: f64 },
    /// Smooth value noise with the given lattice pitch in pixels.
    Noise { seed: u64, scale: f64, min: f64, max: f64 },
}

impl Background {
    fn at(&self, x: usize, y: usize, width: usize, height: usize) -> f64 {
        match *self {
            Background::Flat(v) => v,
            Background::Gradient { from, to } => {
                let tx = x as f64 / (width - 1).max(1) as f64;
                let ty = y as f64 / (height - 1).max(1) as f64;
                from + (to - from) * (tx + ty) / 2.0
            }
            Background::Noise {
                seed,
                scale,
                min,
                max,
            } => {
                // Bilinearly interpolated lattice noise.
                let fx = x as f64 / scale;
                let fy = y as f64 / scale;
                let x0 = fx.floor();
                let y0 = fy.floor();
                let tx = fx - x0;
                let ty = fy - y0;
                let n = |dx: i64, dy: i64| {
                    cell_noise(x0 as i64 + dx, y0 as i64 + dy, 0, seed)
                };
                let v = (n(0, 0) * (1.0 - tx) + n(1, 0) * tx) * (1.0 - ty)
                    + (n(0, 1) * (1.0 - tx) + n(1, 1) * tx) * ty;
                min + (max - min) * v
            }
        }
    }
}

/// Directional light intensity over frames.
#[derive(Debug, Clone, Copy)]
pub enum LightSchedule {
    Constant,
    /// Alternates full and `low` intensity every `period` frames.
    Flash { period: usize, low: f64 },
}

impl LightSchedule {
    fn intensity(&self, frame: usize) -> f64 {
        match *self {
            LightSchedule::Constant => 1.0,
            LightSchedule::Flash { period, low } => {
                if (frame / period.max(1)) % 2 == 0 {
                    1.0
                } else {
                    low
                }
            }
        }
    }
}

/// Full appearance description of a rendered scene.
#[derive(Debug, Clone, Copy)]
pub struct Appearance {
    pub albedo: Albedo,
    pub background: Background,
    /// Unit vector from the surface toward the light, camera frame.
    pub light_direction: Vector3<f64>,
    pub ambient: f64,
    pub schedule: LightSchedule,
    pub supersample: bool,
}

impl Default for Appearance {
    fn default() -> Self {
        Self {
            albedo: Albedo::Flat(0.85),
            background: Background::Flat(0.15),
            light_direction: Vector3::new(-0.3, -0.5, -0.8).normalize(),
            ambient: 0.35,
            schedule: LightSchedule::Constant,
            supersample: false,
        }
    }
}

/// Appearance for the synthetic tracking fixtures: a mild checker
/// texture (enough corners for the keypoint stage) over a weak
/// background ramp, with soft shading so the silhouette step stays the
/// strongest edge in the frame.
pub fn fixture_appearance() -> Appearance {
    Appearance {
        albedo: Albedo::Checker {
            scale: 0.25,
            bright: 0.85,
            dark: 0.55,
        },
        background: Background::Gradient {
            from: 0.02,
            to: 0.18,
        },
        ambient: 0.7,
        supersample: true,
        ..Appearance::default()
    }
}

/// Flat-shaded variant without texture edges: the silhouette dominates
/// the energy completely. Used by the pose-refinement fixtures.
pub fn shaded_appearance() -> Appearance {
    Appearance {
        albedo: Albedo::Flat(0.85),
        background: Background::Flat(0.12),
        ambient: 0.6,
        supersample: true,
        ..Appearance::default()
    }
}

/// Untextured variant of [`fixture_appearance`]: uniform unshaded albedo
/// that starves the corner detector while keeping a strong silhouette.
pub fn untextured_appearance() -> Appearance {
    Appearance {
        albedo: Albedo::Flat(0.85),
        background: Background::Flat(0.15),
        ambient: 1.0,
        ..Appearance::default()
    }
}

struct RasterBuffers {
    width: usize,
    height: usize,
    inv_z: Vec<f64>,
    face: Vec<u32>,
    position: Vec<Point3<f64>>,
}

/// Fills an item buffer with the nearest face per pixel plus the
/// perspective-correct model-frame position of the surface point.
fn rasterize(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> RasterBuffers {
    let mut buffers = RasterBuffers {
        width,
        height,
        inv_z: vec![0.0; width * height],
        face: vec![u32::MAX; width * height],
        position: vec![Point3::origin(); width * height],
    };

    for (fi, _) in mesh.faces().iter().enumerate() {
        let model = mesh.face_vertices(fi);
        let cam = [
            pose.transform_point(&model[0]),
            pose.transform_point(&model[1]),
            pose.transform_point(&model[2]),
        ];
        if cam.iter().any(|c| c.z <= NEAR_PLANE) {
            continue;
        }
        let screen: Vec<(f64, f64)> = cam
            .iter()
            .map(|c| (k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy))
            .collect();
        let (ax, ay) = screen[0];
        let (bx, by) = screen[1];
        let (cx, cy) = screen[2];

        let area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if area.abs() < 1e-12 {
            continue;
        }
        let inv_area = 1.0 / area;

        let min_x = ax.min(bx).min(cx).floor().max(0.0) as usize;
        let max_x = (ax.max(bx).max(cx).ceil().max(0.0) as usize).min(width.saturating_sub(1));
        let min_y = ay.min(by).min(cy).floor().max(0.0) as usize;
        let max_y = (ay.max(by).max(cy).ceil().max(0.0) as usize).min(height.saturating_sub(1));
        if min_x > max_x || min_y > max_y {
            continue;
        }

        let wa = [1.0 / cam[0].z, 1.0 / cam[1].z, 1.0 / cam[2].z];
        for py in min_y..=max_y {
            let y = py as f64 + 0.5;
            for px in min_x..=max_x {
                let x = px as f64 + 0.5;
                // Barycentric weights: w0 -> vertex 2, w1 -> vertex 0.
                let w0 = ((bx - ax) * (y - ay) - (by - ay) * (x - ax)) * inv_area;
                let w1 = ((cx - bx) * (y - by) - (cy - by) * (x - bx)) * inv_area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let (l0, l1, l2) = (w1, w2, w0);
                let inv_z = l0 * wa[0] + l1 * wa[1] + l2 * wa[2];
                let idx = py * width + px;
                if inv_z > buffers.inv_z[idx] {
                    buffers.inv_z[idx] = inv_z;
                    buffers.face[idx] = fi as u32;
                    let numer = model[0].coords * (l0 * wa[0])
                        + model[1].coords * (l1 * wa[1])
                        + model[2].coords * (l2 * wa[2]);
                    buffers.position[idx] = Point3::from(numer / inv_z);
                }
            }
        }
    }
    buffers
}

fn shade(
    mesh: &Mesh,
    pose: &Pose,
    appearance: &Appearance,
    buffers: &RasterBuffers,
    intensity: f64,
) -> GrayImage {
    let mut data = Vec::with_capacity(buffers.width * buffers.height);
    for y in 0..buffers.height {
        for x in 0..buffers.width {
            let idx = y * buffers.width + x;
            let fi = buffers.face[idx];
            let value = if fi == u32::MAX {
                appearance
                    .background
                    .at(x, y, buffers.width, buffers.height)
            } else {
                let normal = mesh.face_normal(fi as usize);
                let mut n_cam = pose.transform_vector(&normal).normalize();
                // Two-sided shading: flip the normal toward the camera.
                let view_point = buffers.position[idx];
                let cam_point = pose.transform_point(&view_point);
                if n_cam.dot(&cam_point.coords) > 0.0 {
                    n_cam = -n_cam;
                }
                let diffuse = n_cam.dot(&appearance.light_direction).max(0.0);
                let albedo = appearance.albedo.at(&buffers.position[idx]);
                albedo * (appearance.ambient + (1.0 - appearance.ambient) * diffuse) * intensity
            };
            data.push(value.clamp(0.0, 1.0));
        }
    }
    GrayImage::new(buffers.width, buffers.height, data).expect("sized buffer")
}

/// Renders one frame: z-buffered rasterization with Lambertian shading
/// over the scripted background. Deterministic for identical inputs.
pub fn render_frame(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    appearance: &Appearance,
    size: (usize, usize),
    frame: usize,
) -> GrayImage {
    let (width, height) = size;
    let intensity = appearance.schedule.intensity(frame);
    if appearance.supersample {
        let k2 = CameraIntrinsics {
            fx: k.fx * 2.0,
            fy: k.fy * 2.0,
            cx: k.cx * 2.0,
            cy: k.cy * 2.0,
        };
        let buffers = rasterize(mesh, pose, &k2, width * 2, height * 2);
        let big = shade(mesh, pose, appearance, &buffers, intensity);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let s = big.pixel(2 * x, 2 * y)
                    + big.pixel(2 * x + 1, 2 * y)
                    + big.pixel(2 * x, 2 * y + 1)
                    + big.pixel(2 * x + 1, 2 * y + 1);
                data.push(s / 4.0);
            }
        }
        GrayImage::new(width, height, data).expect("sized buffer")
    } else {
        let buffers = rasterize(mesh, pose, k, width, height);
        shade(mesh, pose, appearance, &buffers, intensity)
    }
}

/// The model's pixel footprint at a pose.
pub fn render_mask(mesh: &Mesh, pose: &Pose, k: &CameraIntrinsics, size: (usize, usize)) -> Mask {
    let buffers = rasterize(mesh, pose, k, size.0, size.1);
    let data = buffers.face.iter().map(|&f| f != u32::MAX).collect();
    Mask::new(size.0, size.1, data).expect("sized buffer")
}

/// Per-pixel nearest face under perspective projection (`u32::MAX` for
/// background). This is the reference z-buffer visibility oracle.
pub fn face_item_buffer(
    mesh: &Mesh,
    pose: &Pose,
    k: &CameraIntrinsics,
    size: (usize, usize),
) -> Vec<u32> {
    rasterize(mesh, pose, k, size.0, size.1).face
}

/// Scripted motion patterns mirroring common tracking test conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionPattern {
    /// Circle parallel to the camera sensor plane.
    TranslationXy,
    /// Triangle wave along the camera axis: forward first, then backward.
    TranslationZ,
    /// Rotation about the camera axis.
    RotationInPlane,
    /// Rotation about an axis parallel to the sensor plane.
    RotationOutOfPlane,
    /// Smooth seeded random walk over all six degrees of freedom.
    Free,
}

#[derive(Debug, Clone, Copy)]
pub struct MotionScript {
    pub pattern: MotionPattern,
    /// Speed level 1 (slow) to 5 (fast); scales the per-frame delta.
    pub speed_level: u8,
    pub frames: usize,
    /// Translation amplitude in model units / rotation amplitude in
    /// radians, depending on the pattern.
    pub amplitude: f64,
}

/// Per-frame phase advance of speed level 1, in turns of the base cycle.
const BASE_RATE: f64 = 1.0 / 600.0;

/// Generates the ground-truth pose path for a script, starting at `base`.
pub fn generate_poses(base: &Pose, script: &MotionScript, seed: u64) -> Vec<Pose> {
    assert!((1..=5).contains(&script.speed_level), "speed level must be 1-5");
    let chart = PoseChart::new(*base);
    let rate = script.speed_level as f64 * BASE_RATE;
    let amplitude = script.amplitude;
    let mut poses = Vec::with_capacity(script.frames);

    match script.pattern {
        MotionPattern::TranslationXy => {
            for i in 0..script.frames {
                let phi = 2.0 * std::f64::consts::PI * rate * i as f64;
                poses.push(chart.pose_at(&PoseParams {
                    euler: [0.0; 3],
                    translation: [amplitude * (phi.cos() - 1.0), amplitude * phi.sin(), 0.0],
                }));
            }
        }
        MotionPattern::TranslationZ => {
            for i in 0..script.frames {
                let phase = (rate * i as f64).fract();
                let tri = 1.0 - (1.0 - 2.0 * phase).abs();
                poses.push(chart.pose_at(&PoseParams {
                    euler: [0.0; 3],
                    translation: [0.0, 0.0, amplitude * tri],
                }));
            }
        }
        MotionPattern::RotationInPlane => {
            for i in 0..script.frames {
                let psi = 2.0 * std::f64::consts::PI * rate * i as f64;
                poses.push(chart.pose_at(&PoseParams {
                    euler: [0.0, 0.0, psi],
                    translation: [0.0; 3],
                }));
            }
        }
        MotionPattern::RotationOutOfPlane => {
            for i in 0..script.frames {
                let psi = 2.0 * std::f64::consts::PI * rate * i as f64;
                poses.push(chart.pose_at(&PoseParams {
                    euler: [0.0, psi, 0.0],
                    translation: [0.0; 3],
                }));
            }
        }
        MotionPattern::Free => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut params = [0.0f64; 6];
            let mut velocity = [0.0f64; 6];
            // Per-axis step scale: rotations in radians, translations in
            // model units; the walk reflects at ±amplitude per axis.
            let step = [
                0.02 * rate * 600.0,
                0.02 * rate * 600.0,
                0.02 * rate * 600.0,
                0.01 * amplitude.max(1e-9) * rate * 600.0,
                0.01 * amplitude.max(1e-9) * rate * 600.0,
                0.01 * amplitude.max(1e-9) * rate * 600.0,
            ];
            let bound = [0.4, 0.4, 0.4, amplitude, amplitude, amplitude];
            for _ in 0..script.frames {
                poses.push(chart.pose_at(&PoseParams::from_array(params)));
                for axis in 0..6 {
                    velocity[axis] =
                        0.9 * velocity[axis] + 0.1 * rng.random_range(-step[axis]..=step[axis]);
                    params[axis] += velocity[axis];
                    if params[axis].abs() > bound[axis] {
                        params[axis] = params[axis].clamp(-bound[axis], bound[axis]);
                        velocity[axis] = -velocity[axis];
                    }
                }
            }
        }
    }
    poses
}

/// Renders a full scripted sequence with its ground-truth poses.
///
/// Holds every frame in memory — intended for desk-scale fixture sizes.
pub fn generate_sequence(
    mesh: &Mesh,
    k: &CameraIntrinsics,
    script: &MotionScript,
    appearance: &Appearance,
    seed: u64,
    base: &Pose,
    size: (usize, usize),
) -> (Vec<GrayImage>, Vec<Pose>) {
    let poses = generate_poses(base, script, seed);
    let frames = poses
        .iter()
        .enumerate()
        .map(|(i, pose)| render_frame(mesh, pose, k, appearance, size, i))
        .collect();
    (frames, poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pose_from_params, shapes};

    fn test_k() -> CameraIntrinsics {
        CameraIntrinsics::new(200.0, 200.0, 80.0, 60.0).unwrap()
    }

    #[test]
    fn triangle_covers_exactly_the_expected_pixels() {
        // A fronto-parallel right triangle at z = 2 with legs along x, y.
        // Projected corners: (80,60), (180,60), (80,160): the half-space
        // coverage oracle is x + y <= 240 over the bounding box.
        let mesh = Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 2.0),
                Point3::new(1.0, 0.0, 2.0),
                Point3::new(0.0, 1.0, 2.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let buffer = face_item_buffer(&mesh, &Pose::identity(), &test_k(), (160, 120));
        for y in 0..120usize {
            for x in 0..160usize {
                let px = x as f64 + 0.5;
                let py = y as f64 + 0.5;
                let inside = px >= 80.0 && py >= 60.0 && (px - 80.0) + (py - 60.0) <= 100.0;
                let covered = buffer[y * 160 + x] == 0;
                assert_eq!(covered, inside, "pixel ({x}, {y})");
            }
        }
    }

    #[test]
    fn nearer_triangle_wins_depth_test() {
        let mesh = Mesh::new(
            vec![
                Point3::new(-1.0, -1.0, 3.0),
                Point3::new(1.0, -1.0, 3.0),
                Point3::new(0.0, 1.0, 3.0),
                Point3::new(-1.0, -1.0, 2.0),
                Point3::new(1.0, -1.0, 2.0),
                Point3::new(0.0, 1.0, 2.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let buffer = face_item_buffer(&mesh, &Pose::identity(), &test_k(), (160, 120));
        assert!(buffer.iter().all(|&f| f != 0), "far triangle leaked through");
        assert!(buffer.iter().any(|&f| f == 1));
    }

    #[test]
    fn object_behind_camera_renders_pure_background() {
        let cube = shapes::cube(1.0);
        let pose = Pose::from_parts_unchecked(
            nalgebra::Matrix3::identity(),
            Vector3::new(0.0, 0.0, -5.0),
        );
        let appearance = Appearance {
            background: Background::Flat(0.25),
            ..Appearance::default()
        };
        let img = render_frame(&cube, &pose, &test_k(), &appearance, (64, 48), 0);
        assert!(img.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn rendering_is_deterministic() {
        let cube = shapes::cube(1.0);
        let pose = pose_from_params(&crate::geometry::PoseParams {
            euler: [0.3, 0.4, 0.1],
            translation: [0.0, 0.0, 4.0],
        });
        let appearance = Appearance {
            albedo: Albedo::Noise {
                seed: 9,
                scale: 0.2,
                min: 0.2,
                max: 0.9,
            },
            background: Background::Noise {
                seed: 4,
                scale: 16.0,
                min: 0.1,
                max: 0.5,
            },
            ..Appearance::default()
        };
        let a = render_frame(&cube, &pose, &test_k(), &appearance, (64, 48), 3);
        let b = render_frame(&cube, &pose, &test_k(), &appearance, (64, 48), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn z_translation_script_moves_only_along_camera_axis() {
        let base = pose_from_params(&crate::geometry::PoseParams {
            euler: [0.2, 0.1, 0.0],
            translation: [0.1, -0.2, 5.0],
        });
        let script = MotionScript {
            pattern: MotionPattern::TranslationZ,
            speed_level: 2,
            frames: 50,
            amplitude: 0.8,
        };
        let poses = generate_poses(&base, &script, 0);
        for pose in &poses {
            assert!((pose.rotation() - base.rotation()).abs().max() < 1e-12);
            let dt = pose.translation() - base.translation();
            assert!(dt.x.abs() < 1e-12 && dt.y.abs() < 1e-12);
        }
    }

    #[test]
    fn speed_level_scales_per_frame_delta_exactly() {
        let base = pose_from_params(&crate::geometry::PoseParams {
            euler: [0.0; 3],
            translation: [0.0, 0.0, 5.0],
        });
        let script = |level: u8| MotionScript {
            pattern: MotionPattern::TranslationZ,
            speed_level: level,
            frames: 10,
            amplitude: 1.0,
        };
        let slow = generate_poses(&base, &script(1), 0);
        let fast = generate_poses(&base, &script(5), 0);
        let d1 = (slow[1].translation() - slow[0].translation()).norm();
        let d5 = (fast[1].translation() - fast[0].translation()).norm();
        assert!((d5 - 5.0 * d1).abs() < 1e-12);
    }

    #[test]
    fn free_motion_is_reproducible_and_continuous() {
        let base = pose_from_params(&crate::geometry::PoseParams {
            euler: [0.0; 3],
            translation: [0.0, 0.0, 5.0],
        });
        let script = MotionScript {
            pattern: MotionPattern::Free,
            speed_level: 5,
            frames: 120,
            amplitude: 0.5,
        };
        let a = generate_poses(&base, &script, 42);
        let b = generate_poses(&base, &script, 42);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.rotation(), pb.rotation());
            assert_eq!(pa.translation(), pb.translation());
        }
        for w in a.windows(2) {
            let dt = (w[1].translation() - w[0].translation()).norm();
            assert!(dt < 0.1, "translation jump {dt}");
        }
    }

    #[test]
    fn mask_matches_item_buffer() {
        let cube = shapes::cube(1.0);
        let pose = pose_from_params(&crate::geometry::PoseParams {
            euler: [0.5, 0.2, 0.0],
            translation: [0.0, 0.0, 4.0],
        });
        let mask = render_mask(&cube, &pose, &test_k(), (160, 120));
        let buffer = face_item_buffer(&cube, &pose, &test_k(), (160, 120));
        for y in 0..120 {
            for x in 0..160 {
                assert_eq!(mask.get(x, y), buffer[y * 160 + x] != u32::MAX);
            }
        }
        assert!(mask.count() > 100);
    }
}
