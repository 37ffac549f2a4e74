use std::collections::BTreeMap;
use std::fmt::Write as _;

use contrack_core::evaluation::{pose_error, success_auc};
use serde::Serialize;

use crate::common::{data_err, load_mesh, load_pose_rows, CliError};
use crate::EvalArgs;

#[derive(Serialize)]
struct FrameEntry {
    frame: usize,
    /// Mean vertex displacement; `null` when the frame has no estimate.
    delta: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    auc: f64,
    curve: Vec<CurveSample>,
    frames: Vec<FrameEntry>,
}

#[derive(Serialize)]
struct CurveSample {
    k: f64,
    success_percent: f64,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let gt = load_pose_rows(&args.gt)?;
    let est = load_pose_rows(&args.est)?;
    let est_by_frame: BTreeMap<usize, _> = est.into_iter().collect();

    // Ground-truth frames without an estimate count as failures.
    let mut entries = Vec::with_capacity(gt.len());
    let mut errors = Vec::with_capacity(gt.len());
    for (frame, gt_pose) in &gt {
        let delta = est_by_frame
            .get(frame)
            .map(|est_pose| pose_error(est_pose, gt_pose, &mesh));
        errors.push(delta.unwrap_or(f64::INFINITY));
        entries.push(FrameEntry {
            frame: *frame,
            delta,
        });
    }

    let report = success_auc(&errors, mesh.diameter(), args.samples).map_err(data_err)?;
    let out = Report {
        auc: report.auc,
        curve: report
            .curve
            .iter()
            .map(|&(k, success_percent)| CurveSample {
                k,
                success_percent,
            })
            .collect(),
        frames: entries,
    };
    let json = serde_json::to_string_pretty(&out).expect("report serializes");
    std::fs::write(&args.out, json)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", args.out.display())))?;

    if let Some(plot) = &args.plot {
        let mut csv = String::from("k,success_percent\n");
        for (k, s) in &report.curve {
            let _ = writeln!(csv, "{k},{s}");
        }
        std::fs::write(plot, csv)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", plot.display())))?;
    }

    println!("AUC = {:.4} over {} frames -> {}", report.auc, gt.len(), args.out.display());
    Ok(())
}
