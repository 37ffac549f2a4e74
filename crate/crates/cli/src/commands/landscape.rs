use std::fmt::Write as _;

use contrack_core::energy::{contour_energy, EnergyContext};
use contrack_core::geometry::{PoseChart, PoseParams};
use contrack_core::img::io::load_frame;
use contrack_core::img::{gaussian_blur, gradient};

use crate::common::{
    axis_index, data_err, load_camera, load_config, load_mesh, load_pose_rows, pick_pose,
    scene_with_sidecar, CliError,
};
use crate::LandscapeArgs;

const AXIS_NAMES: [&str; 6] = ["rx", "ry", "rz", "tx", "ty", "tz"];

pub fn run(args: LandscapeArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let k = load_camera(&args.camera)?;
    let config = load_config(args.config.as_deref())?;
    let rows = load_pose_rows(&args.pose)?;
    let center = pick_pose(&rows, args.pose_frame)?;
    let scene = scene_with_sidecar(mesh, &args.mesh, k, &config, args.vis.as_deref())?;

    let frame = load_frame(&args.frame).map_err(data_err)?;
    let original = gradient(&frame).map_err(data_err)?;
    let blurred_img = gaussian_blur(&frame, config.blur_sigma).map_err(data_err)?;
    let blurred = gradient(&blurred_img).map_err(data_err)?;

    let chart = PoseChart::new(center);
    let context = |gradients| EnergyContext {
        gradients,
        mesh: &scene.mesh,
        adjacency: &scene.adjacency,
        icosphere: &scene.icosphere,
        visibility: &scene.visibility,
        intrinsics: scene.intrinsics,
        theta_sharp: config.theta_sharp(),
        spacing: config.sample_spacing_px,
        boundary_as_contour: config.boundary_edges_as_contour,
        chart,
        rotation_step: config.grad_step_rot_rad,
        translation_step: config.grad_step_trans_frac * scene.diameter,
    };
    let ctx_original = context(&original);
    let ctx_blurred = context(&blurred);

    let half_range = |axis: usize| {
        if axis < 3 {
            args.range_rot_deg.to_radians()
        } else {
            args.range_trans_frac * scene.diameter
        }
    };
    let energy_pair = |params: &PoseParams| {
        (
            contour_energy(&ctx_original, params),
            contour_energy(&ctx_blurred, params),
        )
    };

    if args.samples < 2 {
        return Err(CliError::Data("need at least 2 samples".into()));
    }
    let offsets = |axis: usize| -> Vec<f64> {
        let h = half_range(axis);
        (0..args.samples)
            .map(|i| -h + 2.0 * h * i as f64 / (args.samples - 1) as f64)
            .collect()
    };

    let mut csv = String::from("axis_a,axis_b,offset_a,offset_b,energy,energy_blurred\n");
    let axes: Vec<usize> = match &args.axes {
        None => (0..6).collect(),
        Some(list) => list
            .split(',')
            .map(|name| axis_index(name.trim()))
            .collect::<Result<_, _>>()?,
    };
    if axes.is_empty() {
        return Err(CliError::Data("--axes must name at least one axis".into()));
    }
    if axes.len() == 2 {
        // Two axes: a 2D grid slice.
        let (a, b) = (axes[0], axes[1]);
        for &oa in &offsets(a) {
            for &ob in &offsets(b) {
                let mut x = [0.0; 6];
                x[a] = oa;
                x[b] = ob;
                let (e, eb) = energy_pair(&PoseParams::from_array(x));
                let _ = writeln!(csv, "{},{},{oa},{ob},{e},{eb}", AXIS_NAMES[a], AXIS_NAMES[b]);
            }
        }
    } else {
        // One row block per 1D axis (default: all six).
        for &axis in &axes {
            for &offset in &offsets(axis) {
                let mut x = [0.0; 6];
                x[axis] = offset;
                let (e, eb) = energy_pair(&PoseParams::from_array(x));
                let _ = writeln!(csv, "{},,{offset},,{e},{eb}", AXIS_NAMES[axis]);
            }
        }
    }

    std::fs::write(&args.out, csv)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote energy slices to {}", args.out.display());
    Ok(())
}
