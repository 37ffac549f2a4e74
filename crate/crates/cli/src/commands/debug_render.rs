use contrack_core::contour::{detect_contours, sample_contour, EdgeClass};
use contrack_core::geometry::project_camera_point;
use contrack_core::img::io::load_frame;
use contrack_core::img::GrayImage;
use contrack_core::visibility::invisible_set_for_pose;

use crate::common::{
    data_err, load_camera, load_config, load_mesh, load_pose_rows, parse_size, pick_pose,
    scene_with_sidecar, CliError,
};
use crate::DebugRenderArgs;

const CONTOUR_COLOR: [u8; 3] = [160, 32, 240]; // purple
const SHARP_COLOR: [u8; 3] = [0, 255, 255]; // cyan
const SAMPLE_COLOR: [u8; 3] = [255, 255, 255];

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn from_background(background: Option<&GrayImage>, size: (usize, usize)) -> Self {
        match background {
            Some(img) => {
                let mut data = Vec::with_capacity(img.width() * img.height() * 3);
                for &v in img.data() {
                    let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                    data.extend_from_slice(&[g, g, g]);
                }
                Self {
                    width: img.width(),
                    height: img.height(),
                    data,
                }
            }
            None => Self {
                width: size.0,
                height: size.1,
                data: vec![0; size.0 * size.1 * 3],
            },
        }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = 3 * (y as usize * self.width + x as usize);
            self.data[i..i + 3].copy_from_slice(&color);
        }
    }

    /// Draws a line by stepping at sub-pixel increments; endpoints may
    /// lie outside the canvas.
    fn line(&mut self, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
        let dx = b.0 - a.0;
        let dy = b.1 - a.1;
        let steps = (dx.abs().max(dy.abs()) * 2.0).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            self.put(
                (a.0 + t * dx).round() as i64,
                (a.1 + t * dy).round() as i64,
                color,
            );
        }
    }
}

pub fn run(args: DebugRenderArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let k = load_camera(&args.camera)?;
    let config = load_config(args.config.as_deref())?;
    let rows = load_pose_rows(&args.pose)?;
    let pose = pick_pose(&rows, args.pose_frame)?;
    let scene = scene_with_sidecar(mesh, &args.mesh, k, &config, args.vis.as_deref())?;

    let background = match &args.frame {
        Some(path) => Some(load_frame(path).map_err(data_err)?),
        None => None,
    };
    let size = match &background {
        Some(img) => (img.width(), img.height()),
        None => parse_size(&args.size)?,
    };
    let mut canvas = Canvas::from_background(background.as_ref(), size);

    let invisible =
        invisible_set_for_pose(&pose, &scene.icosphere, &scene.visibility).map_err(data_err)?;
    let segments = detect_contours(
        &scene.mesh,
        &scene.adjacency,
        &pose,
        &invisible,
        config.theta_sharp(),
        config.boundary_edges_as_contour,
    );

    for segment in &segments {
        if segment.a.z <= 1e-9 || segment.b.z <= 1e-9 {
            continue;
        }
        let a = project_camera_point(&k, &segment.a).map_err(data_err)?;
        let b = project_camera_point(&k, &segment.b).map_err(data_err)?;
        let color = match segment.class {
            EdgeClass::Sharp => SHARP_COLOR,
            _ => CONTOUR_COLOR,
        };
        canvas.line((a.x, a.y), (b.x, b.y), color);
    }
    if let Ok(samples) = sample_contour(&segments, &k, config.sample_spacing_px, size) {
        for p in &samples.points {
            canvas.put(p.x.round() as i64, p.y.round() as i64, SAMPLE_COLOR);
        }
    }

    let rgb = image::RgbImage::from_raw(canvas.width as u32, canvas.height as u32, canvas.data)
        .expect("canvas buffer sized");
    rgb.save(&args.out)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", args.out.display())))?;
    println!(
        "wrote overlay with {} contour segments to {}",
        segments.len(),
        args.out.display()
    );
    Ok(())
}
