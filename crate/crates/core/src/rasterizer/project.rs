use rayon::prelude::*;

use crate::geometry::{rotation_from_quaternion, screen_bounds, CameraModel, Mat3, ScreenRect, Vec3};
use crate::model::SplatModel;
use crate::sh;

use super::RenderSettings;

/// Per-view quantities of one splat, shared by the forward and backward
/// passes.
#[derive(Clone, Debug)]
pub struct SplatProjection {
    pub index: usize,
    /// Screen-from-uv transform restricted to its independent rows
    /// `(x z, y z, z)` and columns `(u, v, 1)`.
    pub transform: Mat3,
    pub center_px: [f64; 2],
    pub depth: f64,
    pub near: f64,
    pub rect: ScreenRect,
    pub color: [f64; 3],
    pub color_mask: [bool; 3],
    /// World-space normal oriented towards the camera.
    pub normal: Vec3,
    /// `+1` when `normal = t_u × t_v`, `-1` when flipped.
    pub normal_sign: f64,
    pub opacity: f64,
    /// Unnormalized viewing direction `p - camera center`.
    pub view_dir: Vec3,
}

/// Gaussian response of a splat at one pixel center.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    /// Low-pass filtered value `max(G_ray, G_screen)`.
    pub g_hat: f64,
    /// True when the ray-splat branch attains the max (ties included).
    pub ray_branch: bool,
    pub u: f64,
    pub v: f64,
    pub z: f64,
    pub g_ray: f64,
    pub g_screen: f64,
    pub h_u: Vec3,
    pub h_v: Vec3,
    pub cross: Vec3,
}

impl SplatProjection {
    pub fn compute(model: &SplatModel, index: usize, cam: &CameraModel, settings: &RenderSettings) -> Option<Self> {
        let geom = model.geometry(index);
        let rect = screen_bounds(&geom, cam, settings.k_sigma)?;
        let k = cam.intrinsics();
        let r = cam.rotation();
        let kr = k * r;
        let col_u = kr * (geom.tangent_u * geom.scale_u);
        let col_v = kr * (geom.tangent_v * geom.scale_v);
        let col_c = k * (r * geom.center + cam.translation());
        let transform = Mat3::from_columns(&[col_u, col_v, col_c]);
        let depth = col_c.z;
        let view_dir = geom.center - cam.center();
        let (color, color_mask) = sh::eval_color(&model.sh[index], model.active_sh_degree, &view_dir.normalize());
        let t_w = rotation_from_quaternion(model.rotations[index]).column(2).into_owned();
        let normal_sign = if t_w.dot(&view_dir) > 0.0 { -1.0 } else { 1.0 };
        Some(Self {
            index,
            transform,
            center_px: [col_c.x / depth, col_c.y / depth],
            depth,
            near: cam.near,
            rect,
            color,
            color_mask,
            normal: t_w * normal_sign,
            normal_sign,
            opacity: model.opacity(index),
            view_dir,
        })
    }

    /// Evaluates the filtered Gaussian at pixel-center coordinates `(x, y)`.
    #[inline]
    pub fn sample(&self, x: f64, y: f64, sigma: f64) -> Sample {
        let t = &self.transform;
        let row_x = Vec3::new(t[(0, 0)], t[(0, 1)], t[(0, 2)]);
        let row_y = Vec3::new(t[(1, 0)], t[(1, 1)], t[(1, 2)]);
        let row_z = Vec3::new(t[(2, 0)], t[(2, 1)], t[(2, 2)]);
        // planes (a, b, d) acting on (u, v, 1); the zero third column drops out
        let h_u = row_z * x - row_x;
        let h_v = row_z * y - row_y;
        let cross = h_u.cross(&h_v);
        let scale = (h_u[1] * h_v[2]).abs().max((h_u[2] * h_v[1]).abs()).max((h_u[2] * h_v[0]).abs()).max((h_u[0] * h_v[2]).abs());
        let mut ray = None;
        if cross.z.abs() > crate::geometry::DEGENERATE_EPS * scale {
            let u = cross.x / cross.z;
            let v = cross.y / cross.z;
            let z = row_z.x * u + row_z.y * v + row_z.z;
            if z > self.near {
                ray = Some((u, v, z));
            }
        }
        let dx = x - self.center_px[0];
        let dy = y - self.center_px[1];
        let g_screen = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        match ray {
            Some((u, v, z)) => {
                let g_ray = (-(u * u + v * v) / 2.0).exp();
                let ray_branch = g_ray >= g_screen;
                Sample {
                    g_hat: if ray_branch { g_ray } else { g_screen },
                    ray_branch,
                    u,
                    v,
                    z: if ray_branch { z } else { self.depth },
                    g_ray,
                    g_screen,
                    h_u,
                    h_v,
                    cross,
                }
            }
            None => Sample {
                g_hat: g_screen,
                ray_branch: false,
                u: 0.0,
                v: 0.0,
                z: self.depth,
                g_ray: 0.0,
                g_screen,
                h_u,
                h_v,
                cross,
            },
        }
    }
}

/// Projects every splat; culled splats map to `None`.
pub fn project_all(model: &SplatModel, cam: &CameraModel, settings: &RenderSettings) -> Vec<Option<SplatProjection>> {
    (0..model.len()).into_par_iter().map(|i| SplatProjection::compute(model, i, cam, settings)).collect()
}
