//! `contrack` — model-based 3D tracking from the command line.
//!
//! One binary with the full workflow: `precompute` the visibility
//! sidecar, `synth` test sequences with ground truth, `track` a
//! sequence, `eval` the result against ground truth, plus the `landscape`
//! and `debug-render` inspection tools.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (missing or
//! malformed inputs), 3 tracking lost.

mod commands;
mod common;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use common::CliError;

#[derive(Parser)]
#[command(
    name = "contrack",
    version,
    about = "Monocular model-based 3D tracking: keypoints + contour energy"
)]
struct Cli {
    /// Worker threads (0 = hardware default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bake the face-visibility sidecar for a mesh.
    Precompute(PrecomputeArgs),
    /// Render a synthetic sequence with ground-truth poses.
    Synth(SynthArgs),
    /// Track an object through a frame sequence.
    Track(TrackArgs),
    /// Compare estimated poses against ground truth (δ curve and AUC).
    Eval(EvalArgs),
    /// Dump contour-energy slices around a pose as CSV.
    Landscape(LandscapeArgs),
    /// Render a contour overlay (contour purple, sharp cyan) as PNG.
    DebugRender(DebugRenderArgs),
}

#[derive(Args)]
struct PrecomputeArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Icosphere subdivision level.
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Item-buffer resolution per side.
    #[arg(long, default_value_t = 512)]
    resolution: u32,
    /// Output sidecar path (defaults to `<mesh>.cvis`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// Motion script `<pattern>:<speed>` with pattern one of
    /// xy, zoom, inplane, outplane, free and speed 1-5.
    #[arg(long)]
    script: String,
    #[arg(long)]
    frames: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Frame size as WIDTHxHEIGHT.
    #[arg(long, default_value = "640x480")]
    size: String,
    /// Object albedo: checker, flat, or noise.
    #[arg(long, default_value = "checker")]
    appearance: String,
    /// Background: flat, gradient, or noise.
    #[arg(long, default_value = "gradient")]
    background: String,
    /// Enable 2x supersampling.
    #[arg(long)]
    supersample: bool,
    /// Motion amplitude as a fraction of the model diameter.
    #[arg(long, default_value_t = 0.25)]
    amplitude_frac: f64,
    /// Object distance as a multiple of the auto-framing distance.
    #[arg(long, default_value_t = 1.0)]
    distance_scale: f64,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// printf-style frame pattern, e.g. `dir/frame_%06d.png`.
    #[arg(long)]
    frames: String,
    /// CSV with the ground-truth pose of frame 0.
    #[arg(long)]
    init_pose: PathBuf,
    /// Output pose CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-frame diagnostics CSV (defaults to `<out stem>.diag.csv`).
    #[arg(long)]
    diag: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable contour-energy refinement (pure keypoint tracking).
    #[arg(long)]
    no_refine: bool,
    /// JSON config overriding the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Visibility sidecar path (defaults to `<mesh>.cvis`).
    #[arg(long)]
    vis: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    est: PathBuf,
    /// Output JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Optional success-curve CSV for plotting.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Curve sample count over k ∈ [0, 0.2].
    #[arg(long, default_value_t = 201)]
    samples: usize,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// Frame to evaluate the energy on (PNG or PGM).
    #[arg(long)]
    frame: PathBuf,
    /// Pose CSV; the first row (or `--pose-frame`) centers the slices.
    #[arg(long)]
    pose: PathBuf,
    #[arg(long)]
    pose_frame: Option<usize>,
    /// Axes to sweep: one of rx, ry, rz, tx, ty, tz for a 1D slice, or
    /// two comma-separated names for a 2D grid. Default: all six 1D.
    #[arg(long)]
    axes: Option<String>,
    #[arg(long, default_value_t = 41)]
    samples: usize,
    /// Rotation half-range, degrees.
    #[arg(long, default_value_t = 30.0)]
    range_rot_deg: f64,
    /// Translation half-range, fraction of the model diameter.
    #[arg(long, default_value_t = 0.2)]
    range_trans_frac: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    vis: Option<PathBuf>,
}

#[derive(Args)]
struct DebugRenderArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    /// Pose CSV; the first row (or `--pose-frame`) is rendered.
    #[arg(long)]
    pose: PathBuf,
    #[arg(long)]
    pose_frame: Option<usize>,
    /// Optional background frame; otherwise black.
    #[arg(long)]
    frame: Option<PathBuf>,
    /// Frame size as WIDTHxHEIGHT when no background frame is given.
    #[arg(long, default_value = "640x480")]
    size: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    vis: Option<PathBuf>,
}

/// Parses and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            return 1;
        }
    };
    if cli.threads > 0 {
        // A pool may already exist when run() is called repeatedly from
        // the same process (tests); keep the first configuration then.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Precompute(args) => commands::precompute::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Track(args) => commands::track::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Landscape(args) => commands::landscape::run(args),
        Command::DebugRender(args) => commands::debug_render::run(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            2
        }
        Err(CliError::TrackingLost(message)) => {
            eprintln!("error: {message}");
            3
        }
    }
}
