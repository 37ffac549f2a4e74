//! PnP pose estimation with RANSAC outlier rejection.
//!
//! The minimal solver recovers a pose from four correspondences: a
//! homography decomposition seeds near-planar quadruples, POSIT
//! (scaled-orthographic iteration) seeds the rest, and a damped
//! Gauss–Newton pass on the pixel reprojection residuals polishes the
//! seed. The final pose is refined on the full consensus set.

use nalgebra::{Matrix3, Matrix6, Point2, Point3, Rotation3, Vector2, Vector3, Vector6};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::KeypointError;
use crate::geometry::{CameraIntrinsics, Pose};

/// Contribution of a behind-camera point to the average reprojection
/// error; keeps the constraint surface finite over the whole search box.
const BEHIND_CAMERA_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
pub struct PnPParams {
    pub max_iterations: usize,
    /// Inlier reprojection threshold, pixels.
    pub inlier_threshold: f64,
    /// Stop sampling once a hypothesis reaches this inlier rate.
    pub early_exit_rate: f64,
    /// Below this best inlier rate the solve reports no consensus.
    pub min_inlier_rate: f64,
}

impl Default for PnPParams {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            inlier_threshold: 4.0,
            early_exit_rate: 0.8,
            min_inlier_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PnPResult {
    pub pose: Pose,
    pub inliers: Vec<usize>,
    pub inlier_rate: f64,
    /// Mean reprojection error over the inliers, pixels.
    pub avg_error: f64,
}

/// Mean pixel distance between observations and projections; points that
/// land behind the camera contribute a fixed large penalty.
pub fn avg_reproj_error(
    pose: &Pose,
    correspondences: &[(Point2<f64>, Point3<f64>)],
    k: &CameraIntrinsics,
) -> f64 {
    assert!(!correspondences.is_empty());
    let mut sum = 0.0;
    for (uv, x) in correspondences {
        let pc = pose.transform_point(x);
        if pc.z <= 1e-9 {
            sum += BEHIND_CAMERA_PENALTY;
            continue;
        }
        let u = k.fx * pc.x / pc.z + k.cx;
        let v = k.fy * pc.y / pc.z + k.cy;
        sum += ((uv.x - u).powi(2) + (uv.y - v).powi(2)).sqrt();
    }
    sum / correspondences.len() as f64
}

/// The keypoint stage fails when too few points survived tracking or the
/// consensus is too thin. Both thresholds are strict "less than".
pub fn klt_failed(n_tracked: usize, inlier_rate: f64, min_points: usize, min_rate: f64) -> bool {
    n_tracked < min_points || inlier_rate < min_rate
}

fn normalized(uv: &Point2<f64>, k: &CameraIntrinsics) -> Point2<f64> {
    Point2::new((uv.x - k.cx) / k.fx, (uv.y - k.cy) / k.fy)
}

fn reprojection_error(pose: &Pose, uv: &Point2<f64>, x: &Point3<f64>, k: &CameraIntrinsics) -> f64 {
    let pc = pose.transform_point(x);
    if pc.z <= 1e-9 {
        return f64::INFINITY;
    }
    let u = k.fx * pc.x / pc.z + k.cx;
    let v = k.fy * pc.y / pc.z + k.cy;
    ((uv.x - u).powi(2) + (uv.y - v).powi(2)).sqrt()
}

/// Projects an approximate rotation onto SO(3), preserving orientation.
fn orthonormalize(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u_fixed = u;
        u_fixed.column_mut(2).neg_mut();
        r = u_fixed * v_t;
    }
    Some(r)
}

/// POSIT (scaled orthographic projection iteration) for four
/// non-coplanar points. `observed` are normalized image coordinates.
fn posit_pose(world: &[Point3<f64>; 4], observed: &[Point2<f64>; 4]) -> Option<Pose> {
    let a = Matrix3::from_rows(&[
        (world[1] - world[0]).transpose(),
        (world[2] - world[0]).transpose(),
        (world[3] - world[0]).transpose(),
    ]);
    let a_inv = a.try_inverse()?;

    let mut epsilon = [0.0f64; 3];
    let mut pose = None;
    for _ in 0..50 {
        let xi = Vector3::new(
            observed[1].x * (1.0 + epsilon[0]) - observed[0].x,
            observed[2].x * (1.0 + epsilon[1]) - observed[0].x,
            observed[3].x * (1.0 + epsilon[2]) - observed[0].x,
        );
        let eta = Vector3::new(
            observed[1].y * (1.0 + epsilon[0]) - observed[0].y,
            observed[2].y * (1.0 + epsilon[1]) - observed[0].y,
            observed[3].y * (1.0 + epsilon[2]) - observed[0].y,
        );
        let i_vec = a_inv * xi;
        let j_vec = a_inv * eta;
        let scale = (i_vec.norm() + j_vec.norm()) / 2.0;
        if scale < 1e-12 {
            return None;
        }
        let r1 = i_vec / i_vec.norm();
        let r2 = j_vec / j_vec.norm();
        let r3 = r1.cross(&r2);
        let rotation = orthonormalize(&Matrix3::from_rows(&[
            r1.transpose(),
            r2.transpose(),
            r3.transpose(),
        ]))?;
        let z0 = 1.0 / scale;
        if z0 <= 0.0 {
            return None;
        }
        let r3_final = rotation.row(2).transpose();
        let mut new_epsilon = [0.0f64; 3];
        for i in 0..3 {
            new_epsilon[i] = (world[i + 1] - world[0]).dot(&r3_final) / z0;
        }
        let translation = Vector3::new(observed[0].x * z0, observed[0].y * z0, z0)
            - rotation * world[0].coords;
        pose = Some(Pose::from_parts_unchecked(rotation, translation));

        let delta: f64 = (0..3)
            .map(|i| (new_epsilon[i] - epsilon[i]).abs())
            .fold(0.0, f64::max);
        epsilon = new_epsilon;
        if delta < 1e-12 {
            break;
        }
    }
    let pose = pose?;
    world
        .iter()
        .all(|x| pose.transform_point(x).z > 1e-9)
        .then_some(pose)
}

/// Homography-based pose for four (near-)coplanar points.
fn homography_pose(world: &[Point3<f64>; 4], observed: &[Point2<f64>; 4]) -> Option<Pose> {
    // Orthonormal basis of the best-fit plane through the points.
    let centroid = (world[0].coords + world[1].coords + world[2].coords + world[3].coords) / 4.0;
    let mut scatter = Matrix3::<f64>::zeros();
    for x in world {
        let d = x.coords - centroid;
        scatter += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(scatter);
    // Eigenvalues ascending order is not guaranteed; sort indices.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let e1: Vector3<f64> = eig.eigenvectors.column(order[0]).into();
    let e2: Vector3<f64> = eig.eigenvectors.column(order[1]).into();
    let e3 = e1.cross(&e2);
    let basis = Matrix3::from_columns(&[e1, e2, e3]);

    // DLT homography (plane coords -> normalized image coords) from the
    // null space of the 8x9 system via the 9x9 normal matrix.
    let plane: Vec<Vector2<f64>> = world
        .iter()
        .map(|x| {
            let d = x.coords - centroid;
            Vector2::new(d.dot(&e1), d.dot(&e2))
        })
        .collect();
    let mut normal = nalgebra::SMatrix::<f64, 9, 9>::zeros();
    for (a, m) in plane.iter().zip(observed.iter()) {
        let rows = [
            [
                a.x, a.y, 1.0, 0.0, 0.0, 0.0, -m.x * a.x, -m.x * a.y, -m.x,
            ],
            [
                0.0, 0.0, 0.0, a.x, a.y, 1.0, -m.y * a.x, -m.y * a.y, -m.y,
            ],
        ];
        for row in rows {
            let r = nalgebra::SVector::<f64, 9>::from_row_slice(&row);
            normal += r * r.transpose();
        }
    }
    let eig_h = nalgebra::SymmetricEigen::new(normal);
    let mut min_index = 0;
    for i in 1..9 {
        if eig_h.eigenvalues[i] < eig_h.eigenvalues[min_index] {
            min_index = i;
        }
    }
    let h = eig_h.eigenvectors.column(min_index);
    let h1 = Vector3::new(h[0], h[3], h[6]);
    let h2 = Vector3::new(h[1], h[4], h[7]);
    let h3 = Vector3::new(h[2], h[5], h[8]);
    if h1.norm() < 1e-12 || h2.norm() < 1e-12 {
        return None;
    }
    let mut lambda = 2.0 / (h1.norm() + h2.norm());
    if (h3 * lambda).z < 0.0 {
        lambda = -lambda;
    }
    let r1 = h1 * lambda;
    let r2 = h2 * lambda;
    let r3 = r1.cross(&r2);
    let plane_rotation = orthonormalize(&Matrix3::from_columns(&[r1, r2, r3]))?;
    let plane_translation = h3 * lambda;

    let rotation = plane_rotation * basis.transpose();
    let translation = plane_translation - rotation * centroid;
    let pose = Pose::from_parts_unchecked(rotation, translation);
    world
        .iter()
        .all(|x| pose.transform_point(x).z > 1e-9)
        .then_some(pose)
}

/// Damped Gauss–Newton on pixel reprojection residuals. Only accepts
/// updates that reduce the summed squared error, so the result is never
/// worse than the starting pose on the given set.
pub fn refine_pose_gauss_newton(
    init: &Pose,
    correspondences: &[(Point2<f64>, Point3<f64>)],
    k: &CameraIntrinsics,
    iterations: usize,
) -> Pose {
    let sum_squared = |pose: &Pose| -> f64 {
        correspondences
            .iter()
            .map(|(uv, x)| {
                let e = reprojection_error(pose, uv, x, k);
                if e.is_finite() {
                    e * e
                } else {
                    BEHIND_CAMERA_PENALTY
                }
            })
            .sum()
    };

    let mut pose = *init;
    let mut error = sum_squared(&pose);
    for _ in 0..iterations {
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for (uv, x) in correspondences {
            let pc = pose.transform_point(x);
            if pc.z <= 1e-9 {
                continue;
            }
            let inv_z = 1.0 / pc.z;
            let u = k.fx * pc.x * inv_z + k.cx;
            let v = k.fy * pc.y * inv_z + k.cy;
            let residual = Vector2::new(u - uv.x, v - uv.y);
            // d(pixel)/d(camera point)
            let dproj = nalgebra::Matrix2x3::new(
                k.fx * inv_z,
                0.0,
                -k.fx * pc.x * inv_z * inv_z,
                0.0,
                k.fy * inv_z,
                -k.fy * pc.y * inv_z * inv_z,
            );
            // Left-multiplied rotation update: d(pc)/dω = -[pc - t]×,
            // d(pc)/dt = I, with pc - t = R·x.
            let rx = pc.coords - pose.translation();
            let skew = Matrix3::new(
                0.0, -rx.z, rx.y, //
                rx.z, 0.0, -rx.x, //
                -rx.y, rx.x, 0.0,
            );
            let j_rot = dproj * (-skew);
            let j_trans = dproj;
            let mut jacobian = nalgebra::Matrix2x6::<f64>::zeros();
            jacobian.fixed_view_mut::<2, 3>(0, 0).copy_from(&j_rot);
            jacobian.fixed_view_mut::<2, 3>(0, 3).copy_from(&j_trans);
            jtj += jacobian.transpose() * jacobian;
            jtr += jacobian.transpose() * residual;
        }
        let damped = jtj + Matrix6::identity() * 1e-12;
        let Some(solution) = damped.lu().solve(&(-jtr)) else {
            break;
        };

        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let omega = Vector3::new(solution[0], solution[1], solution[2]) * step;
            let dt = Vector3::new(solution[3], solution[4], solution[5]) * step;
            let delta_rot = Rotation3::from_scaled_axis(omega).into_inner();
            let candidate = Pose::from_parts_unchecked(
                delta_rot * pose.rotation(),
                pose.translation() + dt,
            );
            let candidate_error = sum_squared(&candidate);
            if candidate_error < error {
                pose = candidate;
                error = candidate_error;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || solution.norm() < 1e-14 {
            break;
        }
    }
    pose
}

fn minimal_pose(
    world: &[Point3<f64>; 4],
    image_px: &[Point2<f64>; 4],
    k: &CameraIntrinsics,
) -> Option<Pose> {
    let observed = [
        normalized(&image_px[0], k),
        normalized(&image_px[1], k),
        normalized(&image_px[2], k),
        normalized(&image_px[3], k),
    ];
    // Planarity from the singular values of the centered point matrix.
    let centroid = (world[0].coords + world[1].coords + world[2].coords + world[3].coords) / 4.0;
    let mut scatter = Matrix3::<f64>::zeros();
    for x in world {
        let d = x.coords - centroid;
        scatter += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(scatter);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if values[0] <= 1e-18 {
        return None; // all four points coincide
    }
    let planarity = (values[2].max(0.0) / values[0]).sqrt();

    let seed = if planarity < 0.05 {
        homography_pose(world, &observed).or_else(|| posit_pose(world, &observed))
    } else {
        posit_pose(world, &observed).or_else(|| homography_pose(world, &observed))
    }?;

    let pairs: Vec<(Point2<f64>, Point3<f64>)> = image_px
        .iter()
        .zip(world.iter())
        .map(|(uv, x)| (*uv, *x))
        .collect();
    Some(refine_pose_gauss_newton(&seed, &pairs, k, 20))
}

/// RANSAC + Gauss–Newton PnP. Deterministic for a fixed seed.
pub fn solve_pnp_ransac(
    correspondences: &[(Point2<f64>, Point3<f64>)],
    k: &CameraIntrinsics,
    params: &PnPParams,
    seed: u64,
) -> Result<PnPResult, KeypointError> {
    let n = correspondences.len();
    if n < 4 {
        return Err(KeypointError::TooFewPoints { got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Pose, Vec<usize>, f64)> = None;

    for _ in 0..params.max_iterations {
        // Four distinct indices.
        let mut picks = [0usize; 4];
        let mut chosen = 0;
        while chosen < 4 {
            let candidate = rng.random_range(0..n);
            if !picks[..chosen].contains(&candidate) {
                picks[chosen] = candidate;
                chosen += 1;
            }
        }
        let world = [
            correspondences[picks[0]].1,
            correspondences[picks[1]].1,
            correspondences[picks[2]].1,
            correspondences[picks[3]].1,
        ];
        let image = [
            correspondences[picks[0]].0,
            correspondences[picks[1]].0,
            correspondences[picks[2]].0,
            correspondences[picks[3]].0,
        ];
        let Some(pose) = minimal_pose(&world, &image, k) else {
            continue;
        };
        // The hypothesis must at least fit its own sample.
        let self_consistent = picks.iter().all(|&i| {
            reprojection_error(&pose, &correspondences[i].0, &correspondences[i].1, k)
                < params.inlier_threshold
        });
        if !self_consistent {
            continue;
        }

        let mut inliers = Vec::new();
        let mut error_sum = 0.0;
        for (i, (uv, x)) in correspondences.iter().enumerate() {
            let e = reprojection_error(&pose, uv, x, k);
            if e < params.inlier_threshold {
                inliers.push(i);
                error_sum += e;
            }
        }
        let avg = error_sum / inliers.len().max(1) as f64;
        let better = match &best {
            None => true,
            Some((_, best_inliers, best_avg)) => {
                inliers.len() > best_inliers.len()
                    || (inliers.len() == best_inliers.len() && avg < *best_avg)
            }
        };
        if better {
            let rate = inliers.len() as f64 / n as f64;
            best = Some((pose, inliers, avg));
            if rate >= params.early_exit_rate {
                break;
            }
        }
    }

    let Some((hypothesis, hypothesis_inliers, _)) = best else {
        return Err(KeypointError::NoConsensus { best_rate: 0.0 });
    };
    let best_rate = hypothesis_inliers.len() as f64 / n as f64;
    if best_rate < params.min_inlier_rate {
        return Err(KeypointError::NoConsensus { best_rate });
    }

    // Final polish on the consensus set, then re-evaluate membership.
    let consensus: Vec<(Point2<f64>, Point3<f64>)> = hypothesis_inliers
        .iter()
        .map(|&i| correspondences[i])
        .collect();
    let refined = refine_pose_gauss_newton(&hypothesis, &consensus, k, 30);
    let mut inliers = Vec::new();
    let mut error_sum = 0.0;
    for (i, (uv, x)) in correspondences.iter().enumerate() {
        let e = reprojection_error(&refined, uv, x, k);
        if e < params.inlier_threshold {
            inliers.push(i);
            error_sum += e;
        }
    }
    if inliers.is_empty() {
        inliers = hypothesis_inliers;
        error_sum = f64::NAN;
    }
    let avg_error = error_sum / inliers.len() as f64;
    let inlier_rate = inliers.len() as f64 / n as f64;
    Ok(PnPResult {
        pose: refined,
        inliers,
        inlier_rate,
        avg_error,
    })
}
