//! Relative depth from a full three-wall layout (room type 0).
//!
//! The room is modelled as a box whose center wall spans `x in [0, 1]`,
//! `y in [0, r]` on the plane `z = 0`, with the side walls, floor and ceiling
//! extending towards the camera (negative z). Fixing the wall width to 1 fixes
//! the global scale. The fit estimates `(r, f, rotation, translation)` by
//! damped least squares over three residual groups:
//!
//! * reprojection of the four center-wall corners against IDs 1-4,
//! * signed distances of points sampled along the four receding edges to the
//!   image lines through each junction and its border exit,
//! * a weak prior `w (f - f0) / f0` that pins the focal length where it is
//!   not observable (frontoparallel views).

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Point3, Rotation3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{PinholeCamera, Pose};
use crate::error::{Error, Result};
use crate::geom::{cross, P2, V2};
use crate::keypoint::KeypointSet;
use crate::layout::{rasterize, Layout};
use crate::model::{Group, Label, Size};

pub const PARAM_COUNT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Samples per receding edge, spaced evenly up to `edge_extent`.
    pub edge_samples: usize,
    pub edge_extent: f64,
    pub focal_prior_weight: f64,
    pub initial_damping: f64,
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
    pub jacobian_step: f64,
    pub degeneracy_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            edge_samples: 10,
            edge_extent: 1.0,
            focal_prior_weight: 1e-3,
            initial_damping: 1e-3,
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-10,
            jacobian_step: 1e-6,
            degeneracy_condition: 1e8,
        }
    }
}

/// Parameter vector layout: `[r, f, rx, ry, rz, tx, ty, tz]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxCamera {
    pub ratio: f64,
    pub focal: f64,
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl BoxCamera {
    pub fn from_params(p: &DVector<f64>) -> Self {
        BoxCamera {
            ratio: p[0],
            focal: p[1],
            rotation: Vector3::new(p[2], p[3], p[4]),
            translation: Vector3::new(p[5], p[6], p[7]),
        }
    }

    pub fn to_params(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.ratio,
            self.focal,
            self.rotation.x,
            self.rotation.y,
            self.rotation.z,
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraFit {
    /// Height over width of the center wall.
    pub ratio: f64,
    pub focal: f64,
    pub pose: Pose,
    pub principal: [f64; 2],
    pub image_size: Size,
    pub rms_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub degenerate: bool,
    pub condition_number: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

impl CameraFit {
    pub fn camera(&self) -> PinholeCamera {
        PinholeCamera {
            focal: self.focal,
            principal: P2::new(self.principal[0], self.principal[1]),
            rotation: self.pose.rotation(),
            translation: self.pose.translation(),
        }
    }

    /// Image positions of the center-wall corners, ordered as IDs 1-4.
    pub fn corner_projections(&self) -> [Option<P2>; 4] {
        let cam = self.camera();
        corners(1.0, self.ratio).map(|c| cam.project(&c))
    }
}

fn corners(width: f64, ratio: f64) -> [Point3<f64>; 4] {
    let h = ratio * width;
    [
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(width, 0.0, 0.0),
        Point3::new(0.0, h, 0.0),
        Point3::new(width, h, 0.0),
    ]
}

/// The observed layout reduced to what the residuals need.
#[derive(Clone, Debug)]
pub struct FitProblem {
    corner_obs: [P2; 4],
    // point on line and unit normal, one per receding edge (IDs 1-4)
    edge_lines: [(P2, V2); 4],
    principal: P2,
    focal_prior: f64,
    options: FitOptions,
}

impl FitProblem {
    pub fn new(kps: &KeypointSet, image_size: Size, options: FitOptions) -> Result<Self> {
        if kps.group() != Group::A {
            return Err(Error::invalid(format!(
                "depth needs a group A layout, got group {}",
                kps.group()
            )));
        }
        let missing: Vec<u8> = (1..=8).filter(|&id| kps.get(id).is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!(
                "depth needs all 8 type-0 keypoints, missing {missing:?}"
            )));
        }
        if image_size.is_empty() {
            return Err(Error::invalid(format!("image size {image_size} is empty")));
        }
        let p = |id: u8| {
            let k = kps.get(id).expect("checked");
            P2::new(k.x, k.y)
        };
        let corner_obs = [p(1), p(2), p(3), p(4)];
        check_quad(&corner_obs, image_size)?;
        let mut edge_lines = [(P2::origin(), V2::zeros()); 4];
        for (k, line) in edge_lines.iter_mut().enumerate() {
            let a = corner_obs[k];
            let d = p(k as u8 + 5) - a;
            let len = d.norm();
            if len < 1e-9 {
                return Err(Error::invalid(format!(
                    "border exit {} coincides with junction {}",
                    k + 5,
                    k + 1
                )));
            }
            *line = (a, V2::new(-d.y, d.x) / len);
        }
        Ok(FitProblem {
            corner_obs,
            edge_lines,
            principal: P2::new(image_size.width as f64 / 2.0, image_size.height as f64 / 2.0),
            focal_prior: image_size.width as f64,
            options,
        })
    }

    pub fn residual_count(&self) -> usize {
        8 + 4 * self.options.edge_samples + 1
    }

    pub fn residuals(&self, params: &DVector<f64>) -> DVector<f64> {
        self.residuals_at_scale(params, 1.0)
    }

    /// Residuals for a box of wall width `scale` (translation scaled by the
    /// caller). Exposes the scale gauge of the model.
    pub fn residuals_at_scale(&self, params: &DVector<f64>, scale: f64) -> DVector<f64> {
        let bc = BoxCamera::from_params(params);
        let rot = Rotation3::new(bc.rotation);
        let project = |p: &Point3<f64>| {
            let c = rot * p + bc.translation;
            // points behind the camera still project onto the edge line
            let z = if c.z.abs() < 1e-12 { 1e-12 } else { c.z };
            P2::new(
                bc.focal * c.x / z + self.principal.x,
                bc.focal * c.y / z + self.principal.y,
            )
        };
        let mut r = Vec::with_capacity(self.residual_count());
        let cs = corners(scale, bc.ratio);
        for (c, obs) in cs.iter().zip(&self.corner_obs) {
            let q = project(c);
            r.push(q.x - obs.x);
            r.push(q.y - obs.y);
        }
        let m = self.options.edge_samples;
        for (c, (a, n)) in cs.iter().zip(&self.edge_lines) {
            for s in 1..=m {
                let depth = self.options.edge_extent * scale * s as f64 / m as f64;
                let q = project(&(c - Vector3::new(0.0, 0.0, depth)));
                r.push(n.dot(&(q - a)));
            }
        }
        r.push(self.options.focal_prior_weight * (bc.focal - self.focal_prior) / self.focal_prior);
        DVector::from_vec(r)
    }

    /// Forward-difference Jacobian with per-parameter step `h max(1, |p|)`.
    pub fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64> {
        let r0 = self.residuals(params);
        let mut jac = DMatrix::zeros(r0.len(), PARAM_COUNT);
        for j in 0..PARAM_COUNT {
            let h = self.options.jacobian_step * params[j].abs().max(1.0);
            let mut p = params.clone();
            p[j] += h;
            let col = (self.residuals(&p) - &r0) / h;
            jac.set_column(j, &col);
        }
        jac
    }

    pub fn initial_guess(&self) -> DVector<f64> {
        let c = &self.corner_obs;
        let width_px = 0.5 * ((c[1] - c[0]).norm() + (c[3] - c[2]).norm());
        let height_px = 0.5 * ((c[2] - c[0]).norm() + (c[3] - c[1]).norm());
        let f0 = self.focal_prior;
        let z0 = f0 / width_px;
        let r0 = height_px / width_px;
        let center = P2::from((c[0].coords + c[1].coords + c[2].coords + c[3].coords) / 4.0);
        let tx = (center.x - self.principal.x) * z0 / f0 - 0.5;
        let ty = (center.y - self.principal.y) * z0 / f0 - 0.5 * r0;
        BoxCamera {
            ratio: r0,
            focal: f0,
            rotation: Vector3::zeros(),
            translation: Vector3::new(tx, ty, z0),
        }
        .to_params()
    }
}

/// Center-wall quad in order 1, 2, 4, 3 must be convex and non-degenerate.
fn check_quad(c: &[P2; 4], image_size: Size) -> Result<()> {
    let ring = [c[0], c[1], c[3], c[2]];
    let min_area = 1e-6 * image_size.area() as f64;
    let mut signs = [0.0; 4];
    for i in 0..4 {
        let (a, b, d) = (ring[i], ring[(i + 1) % 4], ring[(i + 2) % 4]);
        signs[i] = cross(&(b - a), &(d - b));
    }
    let area = 0.5
        * (0..4)
            .map(|i| cross(&ring[i].coords, &ring[(i + 1) % 4].coords))
            .sum::<f64>();
    let convex = signs.iter().all(|s| *s > 0.0) || signs.iter().all(|s| *s < 0.0);
    if area.abs() <= min_area || !convex {
        return Err(Error::invalid(
            "center-wall corners 1, 2, 4, 3 do not form a convex quadrilateral",
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct LmOutcome {
    params: DVector<f64>,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn levenberg_marquardt(problem: &FitProblem, start: DVector<f64>) -> LmOutcome {
    let o = &problem.options;
    let mut x = start;
    let mut r = problem.residuals(&x);
    let mut cost = 0.5 * r.norm_squared();
    let mut history = vec![cost];
    let mut mu = o.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < o.max_iterations {
        if cost == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let jac = problem.jacobian(&x);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * &r;
        let diag: Vec<f64> = (0..PARAM_COUNT).map(|i| a[(i, i)].max(1e-12)).collect();
        let mut accepted = false;
        while mu < 1e20 {
            let mut damped = a.clone();
            for (i, d) in diag.iter().enumerate() {
                damped[(i, i)] += mu * d;
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-&g))) else {
                mu *= 10.0;
                continue;
            };
            if step.norm() < o.step_tolerance * (x.norm() + o.step_tolerance) {
                converged = true;
                break;
            }
            let candidate = &x + &step;
            let r_new = problem.residuals(&candidate);
            let cost_new = 0.5 * r_new.norm_squared();
            if cost_new.is_finite() && cost_new < cost {
                let rel = (cost - cost_new) / cost;
                x = candidate;
                r = r_new;
                cost = cost_new;
                history.push(cost);
                mu = (mu / 10.0).max(1e-15);
                accepted = true;
                if rel < o.cost_tolerance {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // damping exhausted without progress: numerically at a minimum
            converged = true;
            break;
        }
    }
    LmOutcome {
        params: x,
        iterations,
        converged,
        history,
    }
}

fn scaled_condition(jac: &DMatrix<f64>) -> f64 {
    let a = jac.transpose() * jac;
    let d: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].max(1e-300).sqrt()).collect();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / (d[i] * d[j]));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn fit_camera_and_box(kps: &KeypointSet, image_size: Size, options: &FitOptions) -> Result<CameraFit> {
    let problem = FitProblem::new(kps, image_size, *options)?;
    let start = problem.initial_guess();
    let outcome = levenberg_marquardt(&problem, start);
    let params = &outcome.params;
    let bc = BoxCamera::from_params(params);
    if !(bc.ratio > 0.0 && bc.focal > 0.0) || params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Computation(format!(
            "fit left the valid region (ratio {}, focal {})",
            bc.ratio, bc.focal
        )));
    }
    let rot = Rotation3::new(bc.rotation);
    if corners(1.0, bc.ratio)
        .iter()
        .any(|c| (rot * c + bc.translation).z <= 0.0)
    {
        return Err(Error::Computation("fitted wall lies behind the camera".to_string()));
    }
    let residuals = problem.residuals(params);
    // the focal prior is not a reprojection error
    let reproj = residuals.rows(0, residuals.len() - 1);
    let rms = (reproj.norm_squared() / reproj.len() as f64).sqrt();
    let condition = scaled_condition(&problem.jacobian(params));
    Ok(CameraFit {
        ratio: bc.ratio,
        focal: bc.focal,
        pose: Pose {
            rotation: [bc.rotation.x, bc.rotation.y, bc.rotation.z],
            translation: [bc.translation.x, bc.translation.y, bc.translation.z],
        },
        principal: [problem.principal.x, problem.principal.y],
        image_size,
        rms_residual: rms,
        converged: outcome.converged,
        iterations: outcome.iterations,
        degenerate: condition > options.degeneracy_condition,
        condition_number: condition,
        cost_history: outcome.history,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub size: Size,
    /// Camera-frame forward coordinate per pixel, row-major.
    pub depth: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Pixels whose ray missed their region plane and were filled from the
    /// nearest valid neighbor.
    pub filled_pixels: usize,
}

impl DepthMap {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.depth[y as usize * self.size.width as usize + x as usize]
    }

    /// Depth mapped to `[0, 1]` by the stored min and max.
    pub fn normalized(&self) -> Vec<f64> {
        let span = (self.max - self.min).max(f64::MIN_POSITIVE);
        self.depth.iter().map(|d| (d - self.min) / span).collect()
    }
}

/// Plane `n . X = c` of a region of the fitted box.
fn region_plane(label: Label, ratio: f64) -> Option<(Vector3<f64>, f64)> {
    Some(match label {
        Label::Ceiling => (Vector3::y(), 0.0),
        Label::Floor => (Vector3::y(), ratio),
        Label::LeftWall => (Vector3::x(), 0.0),
        Label::RightWall => (Vector3::x(), 1.0),
        Label::CenterWall => (Vector3::z(), 0.0),
        Label::Void => return None,
    })
}

/// Intersects each pixel ray with the plane of the pixel's layout region.
/// Pixel coordinates of a `size` raster are scaled into the fit's image
/// frame.
pub fn render_depth(fit: &CameraFit, layout: &Layout, size: Size) -> Result<DepthMap> {
    if size.is_empty() {
        return Err(Error::invalid(format!("depth size {size} is empty")));
    }
    let labels = rasterize(layout, size);
    let cam = fit.camera();
    let origin = cam.center();
    let sx = fit.image_size.width as f64 / size.width as f64;
    let sy = fit.image_size.height as f64 / size.height as f64;
    let (w, h) = (size.width as usize, size.height as usize);
    let mut depth = vec![f64::NAN; w * h];
    for j in 0..h {
        for i in 0..w {
            let idx = j * w + i;
            let Some((n, c)) = region_plane(labels.labels()[idx], fit.ratio) else {
                continue;
            };
            let dir = cam.ray_direction(&P2::new(i as f64 * sx, j as f64 * sy));
            let denom = n.dot(&dir);
            if denom.abs() < 1e-12 {
                continue;
            }
            let s = (c - n.dot(&origin.coords)) / denom;
            if s.is_finite() && s > 0.0 {
                depth[idx] = s;
            }
        }
    }
    let filled = fill_from_nearest(&mut depth, w, h)?;
    let (min, max) = depth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    Ok(DepthMap {
        size,
        depth,
        min,
        max,
        filled_pixels: filled,
    })
}

/// Breadth-first fill of NaN pixels from their nearest valid 4-neighbor.
fn fill_from_nearest(depth: &mut [f64], w: usize, h: usize) -> Result<usize> {
    let mut queue: VecDeque<usize> = (0..depth.len()).filter(|&i| !depth[i].is_nan()).collect();
    if queue.is_empty() {
        return Err(Error::Computation("no pixel ray hits its region plane".to_string()));
    }
    let mut filled = 0;
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut neighbors = [None; 4];
        if x > 0 {
            neighbors[0] = Some(i - 1);
        }
        if x + 1 < w {
            neighbors[1] = Some(i + 1);
        }
        if y > 0 {
            neighbors[2] = Some(i - w);
        }
        if y + 1 < h {
            neighbors[3] = Some(i + w);
        }
        for n in neighbors.into_iter().flatten() {
            if depth[n].is_nan() {
                depth[n] = depth[i];
                filled += 1;
                queue.push_back(n);
            }
        }
    }
    Ok(filled)
}
