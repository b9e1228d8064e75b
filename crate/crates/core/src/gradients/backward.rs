use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{rotation_from_quaternion, CameraModel, Mat3, Vec3};
use crate::losses::{ndc_depth, ndc_depth_derivative, DistortionAccumulators};
use crate::model::SplatModel;
use crate::rasterizer::{DistortionKind, RenderOutput, RenderSettings, SplatProjection, TileGrid, MEAN_DEPTH_EPS};
use crate::sh;

use super::{ParamGrads, UpstreamGrads};

/// Gradient with respect to the per-view quantities of one splat.
#[derive(Clone, Copy, Debug, Default)]
struct ProjectionGrad {
    transform: Mat3,
    color: [f64; 3],
    normal: Vec3,
    opacity: f64,
}

impl ProjectionGrad {
    fn add(&mut self, o: &ProjectionGrad) {
        self.transform += o.transform;
        for c in 0..3 {
            self.color[c] += o.color[c];
        }
        self.normal += o.normal;
        self.opacity += o.opacity;
    }
}

/// Upstream gradient on `normal_sum`, including the chain through the
/// normalized normal channel.
fn normal_sum_grad(out: &RenderOutput, up: &UpstreamGrads, i: usize) -> Vec3 {
    let mut g = Vec3::from(up.normal_sum[i]);
    let dn = Vec3::from(up.normal[i]);
    let s = Vec3::from(out.normal_sum[i]);
    let len = s.norm();
    if len > 0.0 && dn != Vec3::zeros() {
        let n = s / len;
        g += (dn - n * n.dot(&dn)) / len;
    }
    g
}

/// Back-propagates one pixel into the tile-local accumulators.
#[allow(clippy::too_many_arguments)]
fn backward_pixel(
    grid: &TileGrid,
    out: &RenderOutput,
    up: &UpstreamGrads,
    cam: &CameraModel,
    settings: &RenderSettings,
    px: usize,
    py: usize,
    local: &mut [ProjectionGrad],
) {
    let i = py * out.width + px;
    let list = out.replay.pixel(i);
    if list.is_empty() {
        return;
    }
    let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
    let m: Vec<f64> = list.iter().map(|e| ndc_depth(e.depth, cam.near, cam.far)).collect();
    let mut total = DistortionAccumulators::default();
    for (e, &mi) in list.iter().zip(&m) {
        total.push(e.weight, mi);
    }
    let a_norm = out.alpha[i] + MEAN_DEPTH_EPS;
    let z_mean = out.mean_depth[i];
    let d_color = up.color[i];
    let d_alpha = up.alpha[i];
    let d_mean = up.mean_depth[i];
    let d_dist = up.distortion[i];
    let d_nsum = normal_sum_grad(out, up, i);
    let median = list.iter().rposition(|e| e.transmittance > 0.5);

    // S = dL/dT_{i+1} · T_{i+1} / T_{i+1} propagated back to front
    let mut s = (0..3).map(|c| d_color[c] * out.background[c]).sum::<f64>();
    for k in (0..list.len()).rev() {
        let e = &list[k];
        let proj = grid.projections[e.splat as usize].as_ref().expect("replayed splats are visible");
        let w = e.weight;
        let mi = m[k];
        let (dist_w, dist_m) = match settings.distortion {
            DistortionKind::Squared => (total.term(mi), 2.0 * w * total.first_moment(mi)),
            DistortionKind::Absolute => {
                let mut gw = 0.0;
                let mut gm = 0.0;
                for (ej, &mj) in list.iter().zip(&m) {
                    gw += ej.weight * (mi - mj).abs();
                    gm += ej.weight * sign(mi - mj);
                }
                (gw, w * gm)
            }
        };
        let g = (0..3).map(|c| d_color[c] * proj.color[c]).sum::<f64>()
            + d_alpha
            + d_mean * (e.depth - z_mean) / a_norm
            + d_nsum.dot(&proj.normal)
            + d_dist * dist_w;
        let mut d_z = d_mean * w / a_norm + d_dist * dist_m * ndc_depth_derivative(e.depth, cam.near, cam.far);
        if median == Some(k) {
            d_z += up.median_depth[i];
        }
        let a = proj.opacity * e.g_hat;
        let d_a = e.transmittance * (g - s);
        s = a * g + (1.0 - a) * s;

        let acc = &mut local[e.slot as usize];
        for c in 0..3 {
            acc.color[c] += w * d_color[c];
        }
        acc.normal += d_nsum * w;
        acc.opacity += d_a * e.g_hat;
        let d_g = d_a * proj.opacity;
        splat_value_backward(proj, x, y, settings.low_pass_sigma, e.ray_branch, d_g, d_z, &mut acc.transform);
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Chains `dĜ` and `dz` of one sample into the projection transform.
#[allow(clippy::too_many_arguments)]
fn splat_value_backward(
    proj: &SplatProjection,
    x: f64,
    y: f64,
    sigma: f64,
    ray_branch: bool,
    d_g: f64,
    d_z: f64,
    d_t: &mut Mat3,
) {
    let smp = proj.sample(x, y, sigma);
    debug_assert_eq!(smp.ray_branch, ray_branch);
    let t = &proj.transform;
    if ray_branch {
        let (u, v) = (smp.u, smp.v);
        let g = smp.g_ray;
        let du = -u * g * d_g + d_z * t[(2, 0)];
        let dv = -v * g * d_g + d_z * t[(2, 1)];
        d_t[(2, 0)] += d_z * u;
        d_t[(2, 1)] += d_z * v;
        d_t[(2, 2)] += d_z;
        let cz = smp.cross.z;
        let d_cross = Vec3::new(du / cz, dv / cz, -(du * u + dv * v) / cz);
        let d_hu = smp.h_v.cross(&d_cross);
        let d_hv = d_cross.cross(&smp.h_u);
        for k in 0..3 {
            d_t[(0, k)] -= d_hu[k];
            d_t[(1, k)] -= d_hv[k];
            d_t[(2, k)] += x * d_hu[k] + y * d_hv[k];
        }
    } else {
        let tz = t[(2, 2)];
        let (cx, cy) = (proj.center_px[0], proj.center_px[1]);
        let k = d_g * smp.g_screen / (sigma * sigma);
        let (dcx, dcy) = (k * (x - cx), k * (y - cy));
        d_t[(0, 2)] += dcx / tz;
        d_t[(1, 2)] += dcy / tz;
        d_t[(2, 2)] += -(dcx * cx + dcy * cy) / tz + d_z;
    }
}

/// `∂R/∂q̂` contracted with `dR`, for a unit quaternion `(w, x, y, z)`.
fn rotation_backward(q: [f64; 4], d_r: &Mat3) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let g = |r: usize, c: usize| d_r[(r, c)];
    let dw = 2.0
        * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    let dx = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) + w * g(2, 1)
        - 2.0 * x * g(2, 2));
    let dy = 2.0
        * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) + z * g(2, 1)
            - 2.0 * y * g(2, 2));
    let dz = 2.0
        * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) + y * g(1, 2)
            + x * g(2, 0)
            + y * g(2, 1));
    let dq = [dw, dx, dy, dz];
    let qh = [w, x, y, z];
    let dot: f64 = (0..4).map(|k| qh[k] * dq[k]).sum();
    [0, 1, 2, 3].map(|k| (dq[k] - qh[k] * dot) / n)
}

/// Parameter gradients of one splat.
struct SplatGrad {
    center: [f64; 3],
    quaternion: [f64; 4],
    log_scale: [f64; 2],
    opacity_logit: f64,
    sh: sh::ShCoeffs,
    screen_grad_norm: f64,
}

/// Chains the per-view gradient of one splat into its parameters.
fn splat_backward(model: &SplatModel, cam: &CameraModel, proj: &SplatProjection, pg: &ProjectionGrad) -> SplatGrad {
    let i = proj.index;
    let r_cam = cam.rotation();
    let kr_t = (cam.intrinsics() * r_cam).transpose();
    let d_su_tu = kr_t * pg.transform.column(0);
    let d_sv_tv = kr_t * pg.transform.column(1);
    let mut d_p = kr_t * pg.transform.column(2);

    let rot = rotation_from_quaternion(model.rotations[i]);
    let t_u = rot.column(0).into_owned();
    let t_v = rot.column(1).into_owned();
    let [su, sv] = model.scales(i);
    let d_rot = Mat3::from_columns(&[d_su_tu * su, d_sv_tv * sv, pg.normal * proj.normal_sign]);

    let mut d_sh = [[0.0; 3]; sh::MAX_SH_COEFFS];
    d_p += sh::eval_color_backward(&model.sh[i], model.active_sh_degree, &proj.view_dir, proj.color_mask, pg.color, &mut d_sh);
    let alpha = proj.opacity;

    // gradient of the projected center in NDC units
    let d_cam = r_cam * d_p;
    let z = proj.depth;
    let gx = d_cam.x * z / cam.fx * (cam.width as f64 / 2.0);
    let gy = d_cam.y * z / cam.fy * (cam.height as f64 / 2.0);
    SplatGrad {
        center: [d_p.x, d_p.y, d_p.z],
        quaternion: rotation_backward(model.rotations[i], &d_rot),
        log_scale: [su * t_u.dot(&d_su_tu), sv * t_v.dot(&d_sv_tv)],
        opacity_logit: pg.opacity * alpha * (1.0 - alpha),
        sh: d_sh,
        screen_grad_norm: (gx * gx + gy * gy).sqrt(),
    }
}

/// Gradient of a loss with respect to every parameter, given the gradient
/// of the loss with respect to each rendered channel.
///
/// Pixels are processed per tile in parallel, each tile accumulating into
/// its own per-slot buffer; those are then reduced in tile order, so the
/// result is independent of the thread count.
pub fn render_backward(
    model: &SplatModel,
    cam: &CameraModel,
    grid: &TileGrid,
    out: &RenderOutput,
    up: &UpstreamGrads,
    settings: &RenderSettings,
) -> Result<ParamGrads> {
    up.check(out.pixel_count())?;
    if grid.projections.len() != model.len() {
        return Err(Error::DimensionMismatch("tile grid does not match the model".into()));
    }
    let locals: Vec<Vec<ProjectionGrad>> = (0..grid.tile_count())
        .into_par_iter()
        .map(|t| {
            let mut local = vec![ProjectionGrad::default(); grid.tiles[t].len()];
            if local.is_empty() {
                return local;
            }
            let (x0, x1, y0, y1) = grid.tile_bounds(t);
            for py in y0..y1 {
                for px in x0..x1 {
                    backward_pixel(grid, out, up, cam, settings, px, py, &mut local);
                }
            }
            local
        })
        .collect();

    let mut per_splat = vec![ProjectionGrad::default(); model.len()];
    for (t, local) in locals.iter().enumerate() {
        for (slot, g) in local.iter().enumerate() {
            per_splat[grid.tiles[t][slot] as usize].add(g);
        }
    }

    let parts: Vec<Option<SplatGrad>> = grid
        .projections
        .par_iter()
        .map(|p| p.as_ref().map(|p| splat_backward(model, cam, p, &per_splat[p.index])))
        .collect();
    let mut grads = ParamGrads::zeros(model.len());
    for (i, part) in parts.into_iter().enumerate() {
        if let Some(g) = part {
            grads.d_center[i] = g.center;
            grads.d_quaternion[i] = g.quaternion;
            grads.d_log_scale[i] = g.log_scale;
            grads.d_opacity_logit[i] = g.opacity_logit;
            grads.d_sh[i] = g.sh;
            grads.screen_grad_norm[i] = g.screen_grad_norm;
        }
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("parameter gradients".into()));
    }
    Ok(grads)
}
