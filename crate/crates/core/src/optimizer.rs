//! Constrained local optimization and Basin-Hopping global search.
//!
//! The local step is a projected quasi-Newton (BFGS) descent over a box
//! with one optional scalar inequality `c(x) ≤ 0`: directions pushing
//! against active bounds are zeroed, directions increasing an active
//! constraint are projected onto its tangent, and each trial point is
//! restored onto the feasible side by Newton steps on `c` before the
//! Armijo test. Every point the module returns lies exactly inside the
//! box and satisfies `c(x) ≤ 1e-6`.
//!
//! Basin-Hopping iterates: random hop within the step scale, local
//! optimization, Metropolis acceptance, until the hop budget or the
//! effectless-hop rule fires. Runs are bit-reproducible for a fixed seed.

use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::contour::EdgeAdjacency;
use crate::energy::{contour_energy, energy_gradient, EnergyContext};
use crate::geometry::{CameraIntrinsics, Mesh, Pose, PoseChart, PoseParams};
use crate::img::{gaussian_blur, gradient, GrayImage, ImageError};
use crate::visibility::{Icosphere, VisibilityMap};

/// Feasibility the caller must provide at the start.
const START_TOL: f64 = 1e-9;
/// Feasibility enforced on every accepted point.
const CONSTRAINT_TOL: f64 = 1e-9;
/// The constraint counts as active within this margin of its boundary.
const ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("start point is infeasible: {reason}")]
    InfeasibleStart { reason: String },
    #[error("frame too small for energy evaluation: {0}")]
    Image(#[from] ImageError),
}

/// Per-coordinate bounds of the search box.
#[derive(Debug, Clone, Copy)]
pub struct BoxBounds {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl BoxBounds {
    /// Symmetric box `[-half, +half]` per coordinate.
    pub fn symmetric(half_widths: [f64; 6]) -> Self {
        let mut lower = [0.0; 6];
        let mut upper = [0.0; 6];
        for i in 0..6 {
            assert!(half_widths[i] > 0.0, "half-width {i} must be positive");
            lower[i] = -half_widths[i];
            upper[i] = half_widths[i];
        }
        Self { lower, upper }
    }

    pub fn contains(&self, x: &[f64; 6]) -> bool {
        (0..6).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    pub fn clamp(&self, x: &[f64; 6]) -> [f64; 6] {
        let mut out = *x;
        for i in 0..6 {
            out[i] = out[i].clamp(self.lower[i], self.upper[i]);
        }
        out
    }
}

/// Search-area constraints: a box plus at most one scalar inequality with
/// the contract `c(x) ≤ 0` feasible.
pub struct Constraints<'a> {
    pub bounds: BoxBounds,
    pub nonlinear: Option<&'a (dyn Fn(&[f64; 6]) -> f64 + Sync)>,
}

impl Constraints<'_> {
    pub fn box_only(bounds: BoxBounds) -> Self {
        Constraints {
            bounds,
            nonlinear: None,
        }
    }

    pub fn is_feasible(&self, x: &[f64; 6], tol: f64) -> bool {
        self.bounds.contains(x)
            && self.nonlinear.map_or(true, |c| c(x) <= tol)
    }
}

fn constraint_gradient(c: &(dyn Fn(&[f64; 6]) -> f64 + Sync), x: &[f64; 6]) -> Vector6<f64> {
    let mut g = Vector6::zeros();
    for i in 0..6 {
        let h = 1e-6 * x[i].abs().max(1.0);
        let mut fwd = *x;
        fwd[i] += h;
        let mut bwd = *x;
        bwd[i] -= h;
        g[i] = (c(&fwd) - c(&bwd)) / (2.0 * h);
    }
    g
}

/// Newton restoration onto `c(x) ≤ CONSTRAINT_TOL`, staying inside the box.
fn restore_feasibility(
    c: &(dyn Fn(&[f64; 6]) -> f64 + Sync),
    bounds: &BoxBounds,
    x: &[f64; 6],
) -> Option<[f64; 6]> {
    let mut current = *x;
    for _ in 0..5 {
        let value = c(&current);
        if value <= CONSTRAINT_TOL {
            return Some(current);
        }
        let grad_c = constraint_gradient(c, &current);
        let norm2 = grad_c.norm_squared();
        if norm2 < 1e-18 {
            return None;
        }
        let step = grad_c * (value / norm2);
        for i in 0..6 {
            current[i] -= step[i];
        }
        current = bounds.clamp(&current);
    }
    if c(&current) <= CONSTRAINT_TOL {
        Some(current)
    } else {
        None
    }
}

/// Projects a direction: zero the components pushing against active box
/// faces, then remove the component increasing an active nonlinear
/// constraint.
fn project_direction(
    direction: Vector6<f64>,
    x: &[f64; 6],
    constraints: &Constraints,
    constraint_grad: Option<&Vector6<f64>>,
) -> Vector6<f64> {
    let mut p = direction;
    let b = &constraints.bounds;
    for i in 0..6 {
        let at_lower = x[i] <= b.lower[i] + 1e-12;
        let at_upper = x[i] >= b.upper[i] - 1e-12;
        if (at_lower && p[i] < 0.0) || (at_upper && p[i] > 0.0) {
            p[i] = 0.0;
        }
    }
    if let Some(gc) = constraint_grad {
        let norm2 = gc.norm_squared();
        if norm2 > 1e-18 && gc.dot(&p) > 0.0 {
            p -= gc * (gc.dot(&p) / norm2);
        }
    }
    p
}

/// Constrained local minimization. Returns a feasible point whose value
/// never exceeds `f(x0)`.
///
/// Stops when the projected steepest-descent direction drops below 1e-6,
/// the accepted step drops below 1e-9, or `max_iterations` is exhausted.
pub fn local_optimize<F, G>(
    f: F,
    grad: G,
    x0: [f64; 6],
    constraints: &Constraints,
    max_iterations: usize,
) -> Result<([f64; 6], f64), OptimizerError>
where
    F: Fn(&[f64; 6]) -> f64,
    G: Fn(&[f64; 6]) -> [f64; 6],
{
    let bounds = &constraints.bounds;
    // Tolerate start points that sit on the boundary up to rounding.
    let x_start = bounds.clamp(&x0);
    let drift: f64 = (0..6).map(|i| (x_start[i] - x0[i]).abs()).sum();
    if drift > 1e-9 {
        return Err(OptimizerError::InfeasibleStart {
            reason: format!("outside the box by {drift:.3e}"),
        });
    }
    if let Some(c) = constraints.nonlinear {
        let c0 = c(&x_start);
        if c0 > START_TOL {
            return Err(OptimizerError::InfeasibleStart {
                reason: format!("c(x0) = {c0:.3e} > {START_TOL:.0e}"),
            });
        }
    }

    let mut x = x_start;
    let mut fx = f(&x);
    let mut g = Vector6::from_row_slice(&grad(&x));
    let mut h_inv = Matrix6::<f64>::identity();
    let mut best = (x, fx);

    for _ in 0..max_iterations {
        let constraint_grad_vec = constraints.nonlinear.and_then(|c| {
            if c(&x) >= -ACTIVE_TOL {
                Some(constraint_gradient(c, &x))
            } else {
                None
            }
        });

        // Convergence on the projected steepest-descent direction.
        let projected_gradient =
            project_direction(-g, &x, constraints, constraint_grad_vec.as_ref());
        if projected_gradient.norm() < 1e-6 {
            break;
        }

        let mut p = project_direction(
            -(h_inv * g),
            &x,
            constraints,
            constraint_grad_vec.as_ref(),
        );
        // Fall back to steepest descent when the BFGS direction is not a
        // descent direction after projection.
        if g.dot(&p) >= 0.0 {
            p = projected_gradient;
            h_inv = Matrix6::identity();
        }
        if p.norm() < 1e-12 {
            break;
        }

        let directional = g.dot(&p).min(0.0);
        let mut alpha = 1.0;
        let mut accepted: Option<([f64; 6], f64)> = None;
        for _ in 0..40 {
            let mut candidate = x;
            for i in 0..6 {
                candidate[i] += alpha * p[i];
            }
            candidate = bounds.clamp(&candidate);
            let candidate = match constraints.nonlinear {
                Some(c) if c(&candidate) > CONSTRAINT_TOL => {
                    match restore_feasibility(c, bounds, &candidate) {
                        Some(restored) => restored,
                        None => {
                            alpha *= 0.5;
                            continue;
                        }
                    }
                }
                _ => candidate,
            };
            let f_candidate = f(&candidate);
            if f_candidate <= fx + 1e-4 * alpha * directional {
                accepted = Some((candidate, f_candidate));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };

        let g_new = Vector6::from_row_slice(&grad(&x_new));
        let s = Vector6::from_iterator((0..6).map(|i| x_new[i] - x[i]));
        let y = g_new - g;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let identity = Matrix6::identity();
            let left = identity - (s * y.transpose()) * rho;
            let right = identity - (y * s.transpose()) * rho;
            h_inv = left * h_inv * right + (s * s.transpose()) * rho;
        } else {
            h_inv = Matrix6::identity();
        }

        let step_norm = s.norm();
        x = x_new;
        fx = f_new;
        g = g_new;
        if fx < best.1 {
            best = (x, fx);
        }
        if step_norm < 1e-9 {
            break;
        }
    }
    Ok(best)
}

/// Basin-Hopping termination and step parameters.
///
/// `step_scale` translation entries default to fractions of the model
/// diameter; [`HopSchedule::with_steps`] substitutes concrete units.
#[derive(Debug, Clone)]
pub struct HopSchedule {
    pub min_hops: usize,
    pub max_effectless: usize,
    pub max_hops: usize,
    /// Metropolis temperature; `None` selects the adaptive rule
    /// (0.1 × the standard deviation of the first five hop results,
    /// floored at 1e-6).
    pub temperature: Option<f64>,
    pub step_scale: [f64; 6],
    /// Iteration cap handed to each local optimization.
    pub local_max_iterations: usize,
}

impl HopSchedule {
    pub fn with_steps(mut self, rotation_step: f64, translation_step: f64) -> Self {
        self.step_scale = [
            rotation_step,
            rotation_step,
            rotation_step,
            translation_step,
            translation_step,
            translation_step,
        ];
        self
    }

    pub fn with_temperature(mut self, temperature: Option<f64>) -> Self {
        self.temperature = temperature;
        self
    }

    /// Fixed-length schedule used by the final refinement stage.
    pub fn fixed_hops(&self, hops: usize) -> Self {
        let mut out = self.clone();
        out.min_hops = hops;
        out.max_hops = hops;
        out
    }
}

/// Hop counts from the mesh size: with `s = max(1, 25000/(|V|+|F|))`,
/// the minimum is `min(10s, 100)`, the effectless cap `min(5s, 30)` and
/// the maximum `min(30s, 200)` hops. Small models get more hops.
pub fn hop_schedule(num_vertices: usize, num_faces: usize) -> HopSchedule {
    let total = (num_vertices + num_faces).max(1) as f64;
    let s = (25000.0 / total).max(1.0);
    let count = |factor: f64, cap: f64| (factor * s).min(cap).round() as usize;
    HopSchedule {
        min_hops: count(10.0, 100.0),
        max_effectless: count(5.0, 30.0),
        max_hops: count(30.0, 200.0),
        temperature: None,
        step_scale: [
            10.0f64.to_radians(),
            10.0f64.to_radians(),
            10.0f64.to_radians(),
            0.05,
            0.05,
            0.05,
        ],
        local_max_iterations: 100,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BasinHoppingResult {
    pub x: [f64; 6],
    pub value: f64,
    pub hops: usize,
}

/// Basin-Hopping minimization. The result is the global best over all
/// local optima visited, so it is never worse than `local_optimize(x0)`.
pub fn basin_hopping<F, G>(
    f: F,
    grad: G,
    x0: [f64; 6],
    constraints: &Constraints,
    schedule: &HopSchedule,
    seed: u64,
) -> Result<BasinHoppingResult, OptimizerError>
where
    F: Fn(&[f64; 6]) -> f64,
    G: Fn(&[f64; 6]) -> [f64; 6],
{
    let (mut current_x, mut current_f) = local_optimize(
        &f,
        &grad,
        x0,
        constraints,
        schedule.local_max_iterations,
    )?;
    let mut best = (current_x, current_f);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hops = 0usize;
    let mut since_improvement = 0usize;
    let mut early_values: Vec<f64> = Vec::with_capacity(5);
    let mut temperature = schedule.temperature;

    loop {
        if hops >= schedule.max_hops {
            break;
        }
        if hops >= schedule.min_hops && since_improvement >= schedule.max_effectless {
            break;
        }

        // Draw a hop; resample infeasible draws, then fall back to the
        // box projection if the nonlinear constraint still allows it.
        let mut start = None;
        let mut last_draw = current_x;
        for _ in 0..20 {
            let mut candidate = current_x;
            for i in 0..6 {
                candidate[i] += rng.random_range(-1.0..=1.0) * schedule.step_scale[i];
            }
            last_draw = candidate;
            if constraints.is_feasible(&candidate, START_TOL) {
                start = Some(candidate);
                break;
            }
        }
        let start = start.or_else(|| {
            let clamped = constraints.bounds.clamp(&last_draw);
            constraints
                .nonlinear
                .map_or(true, |c| c(&clamped) <= START_TOL)
                .then_some(clamped)
        });
        hops += 1;
        let Some(start) = start else {
            since_improvement += 1;
            continue;
        };

        let (x_local, f_local) = local_optimize(
            &f,
            &grad,
            start,
            constraints,
            schedule.local_max_iterations,
        )?;

        if temperature.is_none() {
            early_values.push(f_local);
            if early_values.len() == 5 {
                let mean = early_values.iter().sum::<f64>() / 5.0;
                let var =
                    early_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
                temperature = Some((0.1 * var.sqrt()).max(1e-6));
            }
        }

        let delta = f_local - current_f;
        let accept = if delta <= 0.0 {
            true
        } else {
            let t = temperature.unwrap_or(1e-6).max(1e-6);
            rng.random::<f64>() < (-delta / t).exp()
        };
        if accept {
            current_x = x_local;
            current_f = f_local;
        }
        if f_local < best.1 {
            best = (x_local, f_local);
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
    }

    Ok(BasinHoppingResult {
        x: best.0,
        value: best.1,
        hops,
    })
}

/// Static scene data shared by every refinement call.
pub struct RefineScene<'a> {
    pub mesh: &'a Mesh,
    pub adjacency: &'a EdgeAdjacency,
    pub icosphere: &'a Icosphere,
    pub visibility: &'a VisibilityMap,
    pub intrinsics: CameraIntrinsics,
    pub diameter: f64,
}

/// Refinement knobs lifted from the configuration.
#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub theta_sharp: f64,
    pub spacing: f64,
    pub boundary_as_contour: bool,
    pub blur_sigma: f64,
    pub final_hops: usize,
    pub rotation_step: f64,
    pub translation_step_frac: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOutcome {
    pub pose: Pose,
    /// Contour energy of the returned pose on the original frame.
    pub energy: f64,
    /// True when the refined pose produced no usable contour samples.
    pub zero_samples: bool,
}

/// Two-stage contour-energy refinement of an initial pose.
///
/// Stage one maximizes the energy of the σ-blurred frame with the full
/// hop schedule; stage two re-runs a fixed five-hop (configurable) search
/// on the original frame from the stage-one optimum, removing the slight
/// displacement the blur introduces. Both stages share the chart centered
/// on `init`, so `constraints` must be expressed in that chart.
pub fn refine_pose(
    scene: &RefineScene,
    frame: &GrayImage,
    init: &Pose,
    constraints: &Constraints,
    schedule: &HopSchedule,
    options: &RefineOptions,
    seed: u64,
) -> Result<RefineOutcome, OptimizerError> {
    let chart = PoseChart::new(*init);
    let translation_step = options.translation_step_frac * scene.diameter;
    let context = |gradients| EnergyContext {
        gradients,
        mesh: scene.mesh,
        adjacency: scene.adjacency,
        icosphere: scene.icosphere,
        visibility: scene.visibility,
        intrinsics: scene.intrinsics,
        theta_sharp: options.theta_sharp,
        spacing: options.spacing,
        boundary_as_contour: options.boundary_as_contour,
        chart,
        rotation_step: options.rotation_step,
        translation_step,
    };

    let blurred = gaussian_blur(frame, options.blur_sigma)?;
    let blurred_gradients = gradient(&blurred)?;
    let ctx_blurred = context(&blurred_gradients);
    let objective = |x: &[f64; 6]| -contour_energy(&ctx_blurred, &PoseParams::from_array(*x));
    let objective_grad = |x: &[f64; 6]| {
        let mut g = energy_gradient(&ctx_blurred, &PoseParams::from_array(*x));
        for v in &mut g {
            *v = -*v;
        }
        g
    };
    let stage1 = basin_hopping(
        objective,
        objective_grad,
        [0.0; 6],
        constraints,
        schedule,
        seed,
    )?;

    let original_gradients = gradient(frame)?;
    let ctx_original = context(&original_gradients);
    let objective2 = |x: &[f64; 6]| -contour_energy(&ctx_original, &PoseParams::from_array(*x));
    let objective2_grad = |x: &[f64; 6]| {
        let mut g = energy_gradient(&ctx_original, &PoseParams::from_array(*x));
        for v in &mut g {
            *v = -*v;
        }
        g
    };
    let stage2 = basin_hopping(
        objective2,
        objective2_grad,
        stage1.x,
        constraints,
        &schedule.fixed_hops(options.final_hops),
        seed.wrapping_add(0x9e3779b97f4a7c15),
    )?;

    let params = PoseParams::from_array(stage2.x);
    Ok(RefineOutcome {
        pose: chart.pose_at(&params),
        energy: -stage2.value,
        zero_samples: ctx_original.sample_count(&params) == 0,
    })
}
