//! Acceptance suite: one test per release criterion. Every test prints a
//! `criterion N: PASS — …` line with the measured values (visible with
//! `cargo test --test acceptance -- --nocapture`); a failing criterion
//! fails its test.

use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use contrack_core::config::Config;
use contrack_core::contour::{classify_edge, EdgeAdjacency};
use contrack_core::energy::{contour_energy, energy_gradient_with_steps, EnergyContext};
use contrack_core::evaluation::{pose_error, success_auc, DEFAULT_CURVE_SAMPLES};
use contrack_core::geometry::{
    io as geo_io, pose_from_params, project, shapes, CameraIntrinsics, Pose, PoseChart,
    PoseParams,
};
use contrack_core::img::{gaussian_blur, gradient, GrayImage};
use contrack_core::keypoints::{klt_failed, solve_pnp_ransac, track_flow, FlowParams, PnPParams};
use contrack_core::optimizer::hop_schedule;
use contrack_core::synth::{face_item_buffer, render_frame, shaded_appearance};
use contrack_core::tracker::{refine_single_frame, SceneModel};
use contrack_core::visibility::{bake_visibility, build_icosphere, invisible_set_for_pose};
use nalgebra::{Point2, Point3, Rotation3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn desk_camera() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap()
}

fn desk_pose() -> Pose {
    pose_from_params(&PoseParams {
        euler: [0.45, 0.3, 0.1],
        translation: [0.0, 0.0, 2.75],
    })
}

/// Scene + rendered ground-truth frame shared by the energy criteria.
struct EnergyFixture {
    scene: SceneModel,
    gt: Pose,
    blurred_gradients: contrack_core::img::GradientField,
}

fn energy_fixture() -> &'static EnergyFixture {
    static FIXTURE: OnceLock<EnergyFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let k = desk_camera();
        let config = Config::default();
        let scene = SceneModel::build(shapes::cube(1.0), k, &config).unwrap();
        let gt = desk_pose();
        let frame = render_frame(&scene.mesh, &gt, &k, &shaded_appearance(), (640, 480), 0);
        let blurred = gaussian_blur(&frame, config.blur_sigma).unwrap();
        let blurred_gradients = gradient(&blurred).unwrap();
        EnergyFixture {
            scene,
            gt,
            blurred_gradients,
        }
    })
}

fn energy_context<'a>(fixture: &'a EnergyFixture, chart: PoseChart) -> EnergyContext<'a> {
    let config = Config::default();
    EnergyContext {
        gradients: &fixture.blurred_gradients,
        mesh: &fixture.scene.mesh,
        adjacency: &fixture.scene.adjacency,
        icosphere: &fixture.scene.icosphere,
        visibility: &fixture.scene.visibility,
        intrinsics: fixture.scene.intrinsics,
        theta_sharp: config.theta_sharp(),
        spacing: config.sample_spacing_px,
        boundary_as_contour: true,
        chart,
        rotation_step: config.grad_step_rot_rad,
        translation_step: config.grad_step_trans_frac * fixture.scene.diameter,
    }
}

#[test]
fn criterion_01_icosphere_counts() {
    let start = Instant::now();
    for level in 0..=4u32 {
        let ico = build_icosphere(level).unwrap();
        let n = 4usize.pow(level);
        assert_eq!(ico.vertices().len(), 10 * n + 2, "vertices at level {level}");
        assert_eq!(ico.faces().len(), 20 * n, "faces at level {level}");
    }
    let elapsed = start.elapsed();
    assert_eq!(build_icosphere(4).unwrap().vertices().len(), 2562);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:.2?}");
    println!("criterion 1: PASS — levels 0-4 match 10·4ⁿ+2 / 20·4ⁿ, level 4 = 2562 vertices ({elapsed:.2?})");
}

#[test]
fn criterion_02_hop_schedule() {
    let cases = [
        (1000usize, (100usize, 30usize, 200usize)),
        (25000, (10, 5, 30)),
        (250000, (10, 5, 30)),
    ];
    for (total, expected) in cases {
        let s = hop_schedule(total / 2, total - total / 2);
        assert_eq!(
            (s.min_hops, s.max_effectless, s.max_hops),
            expected,
            "|V|+|F| = {total}"
        );
    }
    println!("criterion 2: PASS — hop triples (100,30,200), (10,5,30), (10,5,30) for |V|+|F| ∈ {{1000, 25000, 250000}}");
}

#[test]
fn criterion_03_edge_classification_oracle() {
    let k = desk_camera();
    let config = Config::default();
    let theta = config.theta_sharp();
    let mut total_edges = 0usize;
    let mut disagreements = 0usize;
    let mut matched_inputs = 0usize;
    let mut matched_inputs_agree = 0usize;

    for (name, mesh, scale) in [
        ("cube", shapes::cube(1.0), 1.0f64),
        ("torus", shapes::torus(1.0, 0.4, 24, 12), 1.4),
    ] {
        let adjacency = EdgeAdjacency::build(&mesh).unwrap();
        let ico = build_icosphere(config.icosphere_level).unwrap();
        let map = bake_visibility(&mesh, &ico, config.bake_resolution);
        let mut rng = ChaCha8Rng::seed_from_u64(33);

        for _ in 0..100 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let rotation = if axis.norm() < 1e-9 {
                nalgebra::Matrix3::identity()
            } else {
                Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
                    .into_inner()
            };
            let pose = Pose::from_parts_unchecked(
                rotation,
                Vector3::new(
                    rng.random_range(-0.3..0.3) * scale,
                    rng.random_range(-0.3..0.3) * scale,
                    rng.random_range(4.0..8.0) * scale,
                ),
            );

            let s = invisible_set_for_pose(&pose, &ico, &map).unwrap();
            let in_s = |f: u32| s.binary_search(&f).is_ok();
            // z-buffer oracle: a face is invisible when it wins no pixel.
            let buffer = face_item_buffer(&mesh, &pose, &k, (640, 480));
            let mut seen = vec![false; mesh.faces().len()];
            for id in buffer {
                if id != u32::MAX {
                    seen[id as usize] = true;
                }
            }

            let cam: Vec<Point3<f64>> = mesh
                .vertices()
                .iter()
                .map(|v| pose.transform_point(v))
                .collect();
            for edge in adjacency.edges() {
                let (Some((v1, f1)), Some((v2, f2))) = (edge.face1, edge.face2) else {
                    continue;
                };
                let ours = classify_edge(
                    &cam[v1 as usize],
                    &cam[v2 as usize],
                    &cam[edge.p as usize],
                    &cam[edge.q as usize],
                    in_s(f1),
                    in_s(f2),
                    theta,
                );
                let oracle = classify_edge(
                    &cam[v1 as usize],
                    &cam[v2 as usize],
                    &cam[edge.p as usize],
                    &cam[edge.q as usize],
                    !seen[f1 as usize],
                    !seen[f2 as usize],
                    theta,
                );
                total_edges += 1;
                if ours != oracle {
                    disagreements += 1;
                }
                if in_s(f1) == !seen[f1 as usize] && in_s(f2) == !seen[f2 as usize] {
                    matched_inputs += 1;
                    if ours == oracle {
                        matched_inputs_agree += 1;
                    }
                }
            }
        }
        let _ = name;
    }

    assert_eq!(
        matched_inputs, matched_inputs_agree,
        "classification must agree whenever the per-face visibility matches"
    );
    let rate = disagreements as f64 / total_edges as f64;
    assert!(
        rate <= 0.02,
        "disagreement {:.3}% over {total_edges} edges",
        100.0 * rate
    );
    println!(
        "criterion 3: PASS — {matched_inputs}/{matched_inputs} agreement on visibility-matched edges, overall disagreement {:.3}% ≤ 2% ({total_edges} edge evaluations)",
        100.0 * rate
    );
}

#[test]
fn criterion_04_energy_ranking() {
    let start = Instant::now();
    let fixture = energy_fixture();
    let ctx = energy_context(fixture, PoseChart::new(fixture.gt));
    let d = fixture.scene.diameter;
    let e_gt = contour_energy(&ctx, &PoseParams::zero());

    let half = [
        30.0f64.to_radians(),
        30.0f64.to_radians(),
        30.0f64.to_radians(),
        0.1 * d,
        0.1 * d,
        0.2 * d,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut beaten = 0usize;
    let trials = 1000;
    for _ in 0..trials {
        let mut params = [0.0f64; 6];
        for (p, h) in params.iter_mut().zip(&half) {
            *p = rng.random_range(-*h..*h);
        }
        if e_gt > contour_energy(&ctx, &PoseParams::from_array(params)) {
            beaten += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        beaten >= 950,
        "ground truth beat only {beaten}/{trials} fallback-box poses"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:.2?}");
    println!(
        "criterion 4: PASS — E(ground truth) = {e_gt:.4} beats {beaten}/{trials} uniform fallback-box poses (≥950 required, {elapsed:.2?})"
    );
}

/// KNOWN RED. The criterion demands that halving the finite-difference
/// steps changes every gradient component by < 5% at 10 random poses.
/// The discretized energy cannot satisfy this: |∇I·n| puts a derivative
/// kink wherever a sample's dot product crosses zero (silhouette-corner
/// samples do so continually under pose motion), and the per-window kink
/// density is invariant under sample spacing, so some probe straddles a
/// kink at almost every random pose (measured: 0/40 seeds pass across
/// fixture scales, blur levels σ ∈ [1.1, 3], spacings 8 px down to
/// 0.5 px; per-seed best case ~25% pass probability). The
/// finite-difference implementation itself is validated on smooth
/// stretches by energy::tests::gradient_consistency_under_step_halving.
/// See the decisions ledger for the full analysis.
#[test]
fn criterion_05_gradient_step_consistency() {
    let fixture = energy_fixture();
    let ctx = energy_context(fixture, PoseChart::new(fixture.gt));
    let d = fixture.scene.diameter;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    // Components that vanish make the relative change ill-defined; such
    // draws are redrawn.
    while checked < 10 {
        let params = PoseParams {
            euler: [
                rng.random_range(-0.06..0.06),
                rng.random_range(-0.06..0.06),
                rng.random_range(-0.06..0.06),
            ],
            translation: [
                rng.random_range(-0.02 * d..0.02 * d),
                rng.random_range(-0.02 * d..0.02 * d),
                rng.random_range(-0.04 * d..0.04 * d),
            ],
        };
        let g = energy_gradient_with_steps(&ctx, &params, 1e-3, 1e-3 * d);
        if g.iter().any(|v| v.abs() < 1e-4) {
            continue;
        }
        let g_half = energy_gradient_with_steps(&ctx, &params, 0.5e-3, 0.5e-3 * d);
        for axis in 0..6 {
            let change = (g_half[axis] - g[axis]).abs() / g[axis].abs();
            worst = worst.max(change);
            if change >= 0.05 {
                failures.push(format!(
                    "pose {checked} axis {axis}: {:.1}%",
                    100.0 * change
                ));
            }
        }
        checked += 1;
    }
    assert!(
        failures.is_empty(),
        "halving the steps changed components by ≥5% at {} of 60 probes \
         (worst {:.1}%) — intrinsic derivative kinks of the sampled energy, \
         see the test comment and the decisions ledger: {:?}",
        failures.len(),
        100.0 * worst,
        failures
    );
    println!(
        "criterion 5: PASS — 10 poses × 6 components, worst halving change {:.2}% < 5%",
        100.0 * worst
    );
}

#[test]
fn criterion_06_pnp_accuracy() {
    let k = desk_camera();
    let params = PnPParams::default();
    let mut worst_exact = (0.0f64, 0.0f64);
    let mut worst_outliers = (0.0f64, 0.0f64);

    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + trial);
        let gt = pose_from_params(&PoseParams {
            euler: [
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
            ],
            translation: [
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(3.0..5.0),
            ],
        });
        let mut pairs: Vec<(Point2<f64>, Point3<f64>)> = Vec::new();
        while pairs.len() < 20 {
            let x = Point3::new(
                rng.random_range(-0.6..0.6),
                rng.random_range(-0.6..0.6),
                rng.random_range(-0.6..0.6),
            );
            if let Ok(uv) = project(&gt, &k, &x) {
                if (0.0..640.0).contains(&uv.x) && (0.0..480.0).contains(&uv.y) {
                    pairs.push((uv, x));
                }
            }
        }
        let diameter = {
            let mut best = 0.0f64;
            for i in 0..pairs.len() {
                for j in (i + 1)..pairs.len() {
                    best = best.max((pairs[i].1 - pairs[j].1).norm());
                }
            }
            best
        };
        let rot_err = |pose: &Pose| {
            let rel = pose.rotation().transpose() * gt.rotation();
            ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
        };

        // Exact correspondences.
        let result = solve_pnp_ransac(&pairs, &k, &params, trial).unwrap();
        let (re, te) = (
            rot_err(&result.pose),
            (result.pose.translation() - gt.translation()).norm(),
        );
        assert!(re < 1e-6, "trial {trial}: rotation error {re:.2e}");
        assert!(te < 1e-6 * diameter, "trial {trial}: translation error {te:.2e}");
        worst_exact = (worst_exact.0.max(re), worst_exact.1.max(te / diameter));

        // 30% genuine outliers (uniform pixels away from the truth).
        let mut corrupted = pairs.clone();
        for i in 0..6 {
            let index = 3 * i;
            loop {
                let fake = Point2::new(
                    rng.random_range(0.0..640.0),
                    rng.random_range(0.0..480.0),
                );
                if (fake - pairs[index].0).norm() > 8.0 {
                    corrupted[index].0 = fake;
                    break;
                }
            }
        }
        let result = solve_pnp_ransac(&corrupted, &k, &params, trial).unwrap();
        let (re, te) = (
            rot_err(&result.pose),
            (result.pose.translation() - gt.translation()).norm(),
        );
        assert!(re < 1e-3, "trial {trial}: rotation error {re:.2e} with outliers");
        assert!(
            te < 1e-3 * diameter,
            "trial {trial}: translation error {te:.2e} with outliers"
        );
        worst_outliers = (worst_outliers.0.max(re), worst_outliers.1.max(te / diameter));
    }
    println!(
        "criterion 6: PASS — 100/100 trials; worst exact (rot {:.1e} rad, trans {:.1e}·d), worst with 30% outliers (rot {:.1e}, trans {:.1e}·d)",
        worst_exact.0, worst_exact.1, worst_outliers.0, worst_outliers.1
    );
}

#[test]
fn criterion_07_klt_shift_and_failure_predicate() {
    // Noise texture shifted by an exact integer offset.
    let raw = GrayImage::from_fn(200, 160, |x, y| {
        let mut v = 17u64
            ^ (x as u64).wrapping_mul(0x9e3779b97f4a7c15)
            ^ (y as u64).wrapping_mul(0xc2b2ae3d27d4eb4f);
        v ^= v >> 33;
        v = v.wrapping_mul(0xff51afd7ed558ccd);
        v ^= v >> 33;
        (v % 1000) as f64 / 1000.0
    });
    let img = gaussian_blur(&raw, 1.0).unwrap();
    let moved = GrayImage::from_fn(200, 160, |x, y| {
        img.pixel_clamped(x as isize - 5, y as isize - 3)
    });
    let mut points = Vec::new();
    for y in (24..136).step_by(8) {
        for x in (24..176).step_by(8) {
            points.push(Point2::new(x as f64, y as f64));
        }
    }
    let results = track_flow(&img, &moved, &points, &FlowParams::default());
    let good = points
        .iter()
        .zip(&results)
        .filter(|(p, r)| {
            r.ok && (r.point.x - p.x - 5.0).abs() <= 0.1 && (r.point.y - p.y - 3.0).abs() <= 0.1
        })
        .count();
    let rate = good as f64 / points.len() as f64;
    assert!(
        rate >= 0.95,
        "only {good}/{} points within 0.1 px",
        points.len()
    );

    assert!(klt_failed(7, 0.9, 8, 0.3), "(7, any) must fail");
    assert!(!klt_failed(8, 0.3, 8, 0.3), "(8, 0.3) must pass");
    assert!(klt_failed(100, 0.29, 8, 0.3), "(any, 0.29) must fail");
    println!(
        "criterion 7: PASS — {good}/{} points ({:.1}%) recover the (5,3) shift within 0.1 px; failure predicate matches (7,·)→fail, (8,0.3)→pass, (·,0.29)→fail",
        points.len(),
        100.0 * rate
    );
}

#[test]
fn criterion_08_refinement_recovery() {
    let start = Instant::now();
    let fixture = energy_fixture();
    let config = Config::default();
    let k = fixture.scene.intrinsics;
    let gt = fixture.gt;
    let d = fixture.scene.diameter;
    let frame = render_frame(&fixture.scene.mesh, &gt, &k, &shaded_appearance(), (640, 480), 0);

    let five = 5.0f64.to_radians();
    let mut recovered = 0usize;
    let trials = 50u64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + trial);
        let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
        let direction = loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 1e-3 {
                break v.normalize();
            }
        };
        let offset = direction * (0.05 * d);
        let chart = PoseChart::new(gt);
        let init = chart.pose_at(&PoseParams {
            euler: [sign(&mut rng) * five, sign(&mut rng) * five, sign(&mut rng) * five],
            translation: [offset.x, offset.y, offset.z],
        });
        let refined = refine_single_frame(&fixture.scene, &config, &frame, &init, trial).unwrap();
        if pose_error(&refined, &gt, &fixture.scene.mesh) < 0.02 * d {
            recovered += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        recovered as f64 >= 0.9 * trials as f64,
        "only {recovered}/{trials} trials recovered"
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:.2?}");
    println!(
        "criterion 8: PASS — {recovered}/{trials} trials reach δ < 0.02·d from 5°/0.05·d perturbations ({elapsed:.2?})"
    );
}

/// Synthetic drift corpus shared by criteria 9 and 11.
struct DriftFixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    frames: usize,
}

fn drift_fixture() -> &'static DriftFixture {
    static FIXTURE: OnceLock<DriftFixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let root = dir.path().to_path_buf();
        geo_io::save_obj(&shapes::cube(1.0), &root.join("cube.obj")).unwrap();
        fs::write(
            root.join("cam.json"),
            serde_json::to_string(&desk_camera()).unwrap(),
        )
        .unwrap();
        let frames = 100;
        let code = contrack_cli::run([
            "contrack",
            "synth",
            "--mesh",
            root.join("cube.obj").to_str().unwrap(),
            "--camera",
            root.join("cam.json").to_str().unwrap(),
            "--script",
            "free:3",
            "--frames",
            &frames.to_string(),
            "--out",
            root.join("seq").to_str().unwrap(),
            "--seed",
            "12",
            "--background",
            "noise",
            "--supersample",
        ]);
        assert_eq!(code, 0, "synth failed");
        DriftFixture {
            _dir: dir,
            root,
            frames,
        }
    })
}

fn run_track(fixture: &DriftFixture, seq: &str, out: &str, seed: u64, refine: bool) -> i32 {
    let root = &fixture.root;
    let mut args: Vec<String> = vec![
        "contrack".into(),
        "track".into(),
        "--mesh".into(),
        root.join("cube.obj").to_str().unwrap().into(),
        "--camera".into(),
        root.join("cam.json").to_str().unwrap().into(),
        "--frames".into(),
        format!("{}/frame_%06d.png", root.join(seq).display()),
        "--init-pose".into(),
        root.join(seq).join("gt.csv").to_str().unwrap().into(),
        "--out".into(),
        root.join(out).to_str().unwrap().into(),
        "--seed".into(),
        seed.to_string(),
    ];
    if !refine {
        args.push("--no-refine".into());
    }
    contrack_cli::run(args)
}

fn auc_of(fixture: &DriftFixture, est_csv: &str) -> f64 {
    let mesh = geo_io::load_obj(&fixture.root.join("cube.obj")).unwrap();
    let gt = geo_io::load_pose_csv(&fixture.root.join("seq/gt.csv")).unwrap();
    let est = geo_io::load_pose_csv(&fixture.root.join(est_csv)).unwrap();
    let est_map: std::collections::BTreeMap<usize, Pose> = est.into_iter().collect();
    let errors: Vec<f64> = gt
        .iter()
        .map(|(frame, gt_pose)| {
            est_map
                .get(frame)
                .map(|p| pose_error(p, gt_pose, &mesh))
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    success_auc(&errors, mesh.diameter(), DEFAULT_CURVE_SAMPLES)
        .unwrap()
        .auc
}

#[test]
fn criterion_09_combined_beats_pure_klt() {
    let start = Instant::now();
    let fixture = drift_fixture();
    assert_eq!(run_track(fixture, "seq", "combined.csv", 5, true), 0);
    assert_eq!(run_track(fixture, "seq", "pure_klt.csv", 5, false), 0);
    let combined = auc_of(fixture, "combined.csv");
    let pure = auc_of(fixture, "pure_klt.csv");
    let elapsed = start.elapsed();
    assert!(
        combined > pure,
        "combined AUC {combined:.3} must exceed pure-KLT AUC {pure:.3}"
    );
    assert!(combined >= 18.0, "combined AUC {combined:.3} < 18");
    assert!(elapsed.as_secs_f64() < 900.0, "took {elapsed:.2?}");
    println!(
        "criterion 9: PASS — AUC combined {combined:.3} > pure KLT {pure:.3} on the {}-frame drift fixture, and ≥ 18 ({elapsed:.2?})",
        fixture.frames
    );
}

#[test]
fn criterion_10_evaluation_math() {
    let perfect = success_auc(&[0.0; 12], 1.7, DEFAULT_CURVE_SAMPLES).unwrap();
    assert!((perfect.auc - 20.0).abs() < 1e-9, "perfect auc {}", perfect.auc);
    let failure = success_auc(&[5.0; 12], 1.7, DEFAULT_CURVE_SAMPLES).unwrap();
    assert_eq!(failure.auc, 0.0);
    let mut split = vec![0.0; 6];
    split.extend_from_slice(&[f64::INFINITY; 6]);
    let half = success_auc(&split, 1.7, DEFAULT_CURVE_SAMPLES).unwrap();
    assert!((half.auc - 10.0).abs() <= 0.1, "half-split auc {}", half.auc);
    println!(
        "criterion 10: PASS — perfect {:.3}, all-failure {:.3}, half-split {:.3}",
        perfect.auc, failure.auc, half.auc
    );
}

#[test]
fn criterion_11_track_determinism() {
    let fixture = drift_fixture();
    // A 12-frame slice keeps the double run cheap.
    let slice = fixture.root.join("slice");
    fs::create_dir_all(&slice).unwrap();
    for i in 0..12 {
        fs::copy(
            fixture.root.join(format!("seq/frame_{i:06}.png")),
            slice.join(format!("frame_{i:06}.png")),
        )
        .unwrap();
    }
    fs::copy(fixture.root.join("seq/gt.csv"), slice.join("gt.csv")).unwrap();

    assert_eq!(run_track(fixture, "slice", "det_a.csv", 9, true), 0);
    assert_eq!(run_track(fixture, "slice", "det_b.csv", 9, true), 0);
    let a = fs::read(fixture.root.join("det_a.csv")).unwrap();
    let b = fs::read(fixture.root.join("det_b.csv")).unwrap();
    assert_eq!(a, b, "pose CSVs differ between identical runs");
    let da = fs::read(fixture.root.join("det_a.diag.csv")).unwrap();
    let db = fs::read(fixture.root.join("det_b.diag.csv")).unwrap();
    assert_eq!(da, db, "diagnostic CSVs differ between identical runs");
    println!(
        "criterion 11: PASS — two identical-seed track runs produced byte-identical outputs ({} bytes poses, {} bytes diagnostics)",
        a.len(),
        da.len()
    );
}

#[test]
fn criterion_12_blur_gradient_properties() {
    // Separability against brute-force 2D convolution on a 32×32 image.
    let img = GrayImage::from_fn(32, 32, |x, y| {
        (0.2 + 0.6 * (((x * 13 + y * 7) % 9) as f64) / 9.0).min(1.0)
    });
    let sigma = 1.1;
    let blurred = gaussian_blur(&img, sigma).unwrap();
    let radius = (3.0f64 * sigma).ceil() as isize;
    let kernel: Vec<f64> = {
        let mut k: Vec<f64> = (-radius..=radius)
            .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = k.iter().sum();
        for v in &mut k {
            *v /= sum;
        }
        k
    };
    let mut worst_sep: f64 = 0.0;
    for y in 0..32usize {
        for x in 0..32usize {
            let mut acc = 0.0;
            for (kyi, ky) in kernel.iter().enumerate() {
                for (kxi, kx) in kernel.iter().enumerate() {
                    let sx = x as isize + kxi as isize - radius;
                    let sy = y as isize + kyi as isize - radius;
                    acc += ky * kx * img.pixel_clamped(sx, sy);
                }
            }
            worst_sep = worst_sep.max((acc - blurred.pixel(x, y)).abs());
        }
    }
    assert!(worst_sep < 1e-9, "separability deviation {worst_sep:.2e}");

    // Analytic ramp gradients.
    let w = 40usize;
    let ramp = GrayImage::from_fn(w, 24, |x, y| x as f64 / w as f64 + 0.5 * y as f64 / 24.0);
    let field = gradient(&ramp).unwrap();
    let mut worst_ramp: f64 = 0.0;
    for y in 1..23 {
        for x in 1..w - 1 {
            let g = field.at(x, y);
            worst_ramp = worst_ramp
                .max((g.x - 1.0 / w as f64).abs())
                .max((g.y - 0.5 / 24.0).abs());
        }
    }
    assert!(worst_ramp < 1e-12, "ramp gradient deviation {worst_ramp:.2e}");
    println!(
        "criterion 12: PASS — separability within {worst_sep:.1e} (≤1e-9), ramp gradients within {worst_ramp:.1e} (≤1e-12)"
    );
}
