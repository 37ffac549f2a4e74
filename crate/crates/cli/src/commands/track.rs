use std::fmt::Write as _;
use std::path::PathBuf;

use contrack_core::geometry::io as geo_io;
use contrack_core::img::io::{load_frame, FramePattern};
use contrack_core::tracker::{FrameDiagnostics, Tracker, TrackerError};

use crate::common::{
    data_err, load_camera, load_config, load_mesh, load_pose_rows, scene_with_sidecar, CliError,
};
use crate::TrackArgs;

fn diag_csv(rows: &[(usize, FrameDiagnostics)]) -> String {
    let mut out = String::from("frame,energy,inlier_rate,path\n");
    for (frame, diag) in rows {
        let rate = diag
            .inlier_rate
            .map(|r| r.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            frame,
            diag.energy,
            rate,
            diag.path.as_str()
        );
    }
    out
}

pub fn run(args: TrackArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let k = load_camera(&args.camera)?;
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.no_refine {
        config.refine = false;
    }

    let pattern = FramePattern::parse(&args.frames).map_err(data_err)?;
    let first_path = pattern.path_for(0);
    if !first_path.exists() {
        return Err(CliError::Data(format!(
            "first frame {} does not exist",
            first_path.display()
        )));
    }
    let init_rows = load_pose_rows(&args.init_pose)?;
    let init_pose = init_rows
        .iter()
        .find(|(f, _)| *f == 0)
        .map(|(_, p)| *p)
        .unwrap_or(init_rows[0].1);

    let scene = scene_with_sidecar(mesh, &args.mesh, k, &config, args.vis.as_deref())?;
    let first_frame = load_frame(&first_path).map_err(data_err)?;
    let mut tracker = Tracker::new(&scene, config, init_pose, first_frame);

    let diag_path: PathBuf = args
        .diag
        .clone()
        .unwrap_or_else(|| args.out.with_extension("diag.csv"));

    let mut poses = vec![(0usize, init_pose)];
    let mut diagnostics: Vec<(usize, FrameDiagnostics)> = Vec::new();
    let mut lost: Option<String> = None;
    let mut frame_index = 1usize;
    loop {
        let path = pattern.path_for(frame_index);
        if !path.exists() {
            break;
        }
        let frame = load_frame(&path).map_err(data_err)?;
        match tracker.track_frame(frame) {
            Ok(output) => {
                poses.push((frame_index, output.pose));
                diagnostics.push((frame_index, output.diagnostics));
            }
            Err(TrackerError::TrackingLost { frames }) => {
                lost = Some(format!(
                    "tracking lost at frame {frame_index} ({frames} frames without contour)"
                ));
                break;
            }
            Err(other) => return Err(data_err(other)),
        }
        frame_index += 1;
    }

    geo_io::save_pose_csv(&poses, &args.out).map_err(data_err)?;
    std::fs::write(&diag_path, diag_csv(&diagnostics))
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", diag_path.display())))?;

    println!(
        "tracked {} frames -> {} (diagnostics: {})",
        poses.len(),
        args.out.display(),
        diag_path.display()
    );
    match lost {
        Some(message) => Err(CliError::TrackingLost(message)),
        None => Ok(()),
    }
}
