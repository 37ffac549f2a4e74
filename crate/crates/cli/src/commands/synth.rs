use std::fs;

use contrack_core::geometry::{io as geo_io, pose_from_params, PoseParams};
use contrack_core::img::io::save_png;
use contrack_core::synth::{
    generate_poses, render_frame, Albedo, Appearance, Background, MotionPattern, MotionScript,
};

use crate::common::{data_err, load_camera, load_mesh, parse_size, CliError};
use crate::SynthArgs;

fn parse_script(script: &str, frames: usize, amplitude: f64) -> Result<MotionScript, CliError> {
    let (pattern_name, level) = script
        .split_once(':')
        .ok_or_else(|| CliError::Data(format!("bad script {script:?}, expected pattern:speed")))?;
    let pattern = match pattern_name {
        "xy" => MotionPattern::TranslationXy,
        "zoom" | "z" => MotionPattern::TranslationZ,
        "inplane" => MotionPattern::RotationInPlane,
        "outplane" => MotionPattern::RotationOutOfPlane,
        "free" => MotionPattern::Free,
        other => {
            return Err(CliError::Data(format!(
                "unknown motion pattern {other:?} (expected xy, zoom, inplane, outplane, free)"
            )))
        }
    };
    let speed_level: u8 = level
        .parse()
        .ok()
        .filter(|l| (1..=5).contains(l))
        .ok_or_else(|| CliError::Data(format!("bad speed level {level:?}, expected 1-5")))?;
    Ok(MotionScript {
        pattern,
        speed_level,
        frames,
        amplitude,
    })
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let k = load_camera(&args.camera)?;
    let size = parse_size(&args.size)?;
    let diameter = mesh.diameter();

    let albedo = match args.appearance.as_str() {
        "checker" => Albedo::Checker {
            scale: diameter / 8.0,
            bright: 0.85,
            dark: 0.55,
        },
        "flat" => Albedo::Flat(0.85),
        "noise" => Albedo::Noise {
            seed: args.seed ^ 0x5eed,
            scale: diameter / 10.0,
            min: 0.45,
            max: 0.9,
        },
        other => {
            return Err(CliError::Data(format!(
                "unknown appearance {other:?} (expected checker, flat, noise)"
            )))
        }
    };
    let background = match args.background.as_str() {
        "flat" => Background::Flat(0.12),
        "gradient" => Background::Gradient {
            from: 0.02,
            to: 0.18,
        },
        "noise" => Background::Noise {
            seed: args.seed ^ 0xba5e,
            scale: 24.0,
            min: 0.05,
            max: 0.35,
        },
        other => {
            return Err(CliError::Data(format!(
                "unknown background {other:?} (expected flat, gradient, noise)"
            )))
        }
    };
    let appearance = Appearance {
        albedo,
        background,
        ambient: 0.7,
        supersample: args.supersample,
        ..Appearance::default()
    };

    // Auto framing: the bounding radius covers ≈30% of the frame height.
    let target_px = 0.3 * size.0.min(size.1) as f64;
    let distance = args.distance_scale * k.fx * mesh.bounding_radius() / target_px;
    let base = pose_from_params(&PoseParams {
        euler: [0.4, 0.3, 0.0],
        translation: [0.0, 0.0, distance],
    });

    let script = parse_script(&args.script, args.frames, args.amplitude_frac * diameter)?;
    let poses = generate_poses(&base, &script, args.seed);

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    for (i, pose) in poses.iter().enumerate() {
        let frame = render_frame(&mesh, pose, &k, &appearance, size, i);
        let path = args.out.join(format!("frame_{i:06}.png"));
        save_png(&frame, &path).map_err(data_err)?;
    }
    let rows: Vec<(usize, contrack_core::geometry::Pose)> =
        poses.iter().copied().enumerate().collect();
    geo_io::save_pose_csv(&rows, &args.out.join("gt.csv")).map_err(data_err)?;
    let camera_json = serde_json::to_string_pretty(&k).expect("camera serializes");
    fs::write(args.out.join("cam.json"), camera_json)
        .map_err(|e| CliError::Data(format!("cannot write cam.json: {e}")))?;

    println!(
        "wrote {} frames, gt.csv and cam.json to {}",
        poses.len(),
        args.out.display()
    );
    Ok(())
}
