//! Reverse-mode derivatives of the rendered channels with respect to the
//! splat parameters, and a finite-difference oracle to check them.

mod backward;
mod check;

pub use backward::render_backward;
pub use check::{gradcheck, render_signature, GradcheckConfig, GradcheckReport, Precision, RenderSignature};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::model::SplatModel;
use crate::sh::{coeff_count, ShCoeffs, MAX_SH_COEFFS};

/// Gradient of a scalar loss with respect to every output channel of a
/// render. Buffers are per pixel, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UpstreamGrads {
    pub color: Vec<[f64; 3]>,
    pub alpha: Vec<f64>,
    pub mean_depth: Vec<f64>,
    pub median_depth: Vec<f64>,
    /// Gradient on the normalized normal channel.
    pub normal: Vec<[f64; 3]>,
    pub normal_sum: Vec<[f64; 3]>,
    pub distortion: Vec<f64>,
}

impl UpstreamGrads {
    pub fn zeros(pixels: usize) -> Self {
        Self {
            color: vec![[0.0; 3]; pixels],
            alpha: vec![0.0; pixels],
            mean_depth: vec![0.0; pixels],
            median_depth: vec![0.0; pixels],
            normal: vec![[0.0; 3]; pixels],
            normal_sum: vec![[0.0; 3]; pixels],
            distortion: vec![0.0; pixels],
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.alpha.len()
    }

    pub(crate) fn check(&self, pixels: usize) -> Result<()> {
        let lens = [
            self.color.len(),
            self.alpha.len(),
            self.mean_depth.len(),
            self.median_depth.len(),
            self.normal.len(),
            self.normal_sum.len(),
            self.distortion.len(),
        ];
        if lens.iter().any(|&l| l != pixels) {
            return Err(Error::DimensionMismatch(format!("upstream gradients for {pixels} pixels")));
        }
        let finite = self.color.iter().flatten().all(|v| v.is_finite())
            && self.alpha.iter().all(|v| v.is_finite())
            && self.mean_depth.iter().all(|v| v.is_finite())
            && self.median_depth.iter().all(|v| v.is_finite())
            && self.normal.iter().flatten().all(|v| v.is_finite())
            && self.normal_sum.iter().flatten().all(|v| v.is_finite())
            && self.distortion.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("upstream gradients".into()));
        }
        Ok(())
    }
}

/// Gradient of a scalar loss with respect to the stored parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub d_center: Vec<[f64; 3]>,
    pub d_quaternion: Vec<[f64; 4]>,
    pub d_log_scale: Vec<[f64; 2]>,
    pub d_opacity_logit: Vec<f64>,
    pub d_sh: Vec<ShCoeffs>,
    /// Norm of the gradient with respect to the projected center in NDC
    /// units; the densification statistic.
    pub screen_grad_norm: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros(n: usize) -> Self {
        Self {
            d_center: vec![[0.0; 3]; n],
            d_quaternion: vec![[0.0; 4]; n],
            d_log_scale: vec![[0.0; 2]; n],
            d_opacity_logit: vec![0.0; n],
            d_sh: vec![[[0.0; 3]; MAX_SH_COEFFS]; n],
            screen_grad_norm: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.d_center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_center.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.d_center.iter().flatten().all(|v| v.is_finite())
            && self.d_quaternion.iter().flatten().all(|v| v.is_finite())
            && self.d_log_scale.iter().flatten().all(|v| v.is_finite())
            && self.d_opacity_logit.iter().all(|v| v.is_finite())
            && self.d_sh.iter().flatten().flatten().all(|v| v.is_finite())
            && self.screen_grad_norm.iter().all(|v| v.is_finite())
    }

    pub fn get(&self, p: ParamId) -> f64 {
        match p {
            ParamId::Center(i, k) => self.d_center[i][k],
            ParamId::Quaternion(i, k) => self.d_quaternion[i][k],
            ParamId::LogScale(i, k) => self.d_log_scale[i][k],
            ParamId::OpacityLogit(i) => self.d_opacity_logit[i],
            ParamId::Sh(i, k, c) => self.d_sh[i][k][c],
        }
    }

    pub fn set(&mut self, p: ParamId, v: f64) {
        match p {
            ParamId::Center(i, k) => self.d_center[i][k] = v,
            ParamId::Quaternion(i, k) => self.d_quaternion[i][k] = v,
            ParamId::LogScale(i, k) => self.d_log_scale[i][k] = v,
            ParamId::OpacityLogit(i) => self.d_opacity_logit[i] = v,
            ParamId::Sh(i, k, c) => self.d_sh[i][k][c] = v,
        }
    }

    /// `self += other`, element-wise.
    pub fn accumulate(&mut self, other: &ParamGrads) {
        for (a, b) in self.d_center.iter_mut().zip(&other.d_center) {
            (0..3).for_each(|k| a[k] += b[k]);
        }
        for (a, b) in self.d_quaternion.iter_mut().zip(&other.d_quaternion) {
            (0..4).for_each(|k| a[k] += b[k]);
        }
        for (a, b) in self.d_log_scale.iter_mut().zip(&other.d_log_scale) {
            (0..2).for_each(|k| a[k] += b[k]);
        }
        for (a, b) in self.d_opacity_logit.iter_mut().zip(&other.d_opacity_logit) {
            *a += b;
        }
        for (a, b) in self.d_sh.iter_mut().zip(&other.d_sh) {
            for (ra, rb) in a.iter_mut().zip(b) {
                (0..3).for_each(|c| ra[c] += rb[c]);
            }
        }
        for (a, b) in self.screen_grad_norm.iter_mut().zip(&other.screen_grad_norm) {
            *a += b;
        }
    }
}

/// One scalar parameter of a [`SplatModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    Center(usize, usize),
    Quaternion(usize, usize),
    LogScale(usize, usize),
    OpacityLogit(usize),
    /// `(splat, basis, channel)`
    Sh(usize, usize, usize),
}

impl ParamId {
    pub fn splat(&self) -> usize {
        match *self {
            ParamId::Center(i, _)
            | ParamId::Quaternion(i, _)
            | ParamId::LogScale(i, _)
            | ParamId::OpacityLogit(i)
            | ParamId::Sh(i, _, _) => i,
        }
    }

    pub fn get(&self, m: &SplatModel) -> f64 {
        match *self {
            ParamId::Center(i, k) => m.centers[i][k],
            ParamId::Quaternion(i, k) => m.rotations[i][k],
            ParamId::LogScale(i, k) => m.log_scales[i][k],
            ParamId::OpacityLogit(i) => m.opacity_logits[i],
            ParamId::Sh(i, k, c) => m.sh[i][k][c],
        }
    }

    pub fn set(&self, m: &mut SplatModel, v: f64) {
        match *self {
            ParamId::Center(i, k) => m.centers[i][k] = v,
            ParamId::Quaternion(i, k) => m.rotations[i][k] = v,
            ParamId::LogScale(i, k) => m.log_scales[i][k] = v,
            ParamId::OpacityLogit(i) => m.opacity_logits[i] = v,
            ParamId::Sh(i, k, c) => m.sh[i][k][c] = v,
        }
    }
}

/// Every parameter that influences a render, in a fixed order. SH
/// coefficients above the active degree are left out.
pub fn parameter_ids(m: &SplatModel) -> Vec<ParamId> {
    let mut ids = Vec::new();
    for i in 0..m.len() {
        ids.extend((0..3).map(|k| ParamId::Center(i, k)));
        ids.extend((0..4).map(|k| ParamId::Quaternion(i, k)));
        ids.extend((0..2).map(|k| ParamId::LogScale(i, k)));
        ids.push(ParamId::OpacityLogit(i));
        for k in 0..coeff_count(m.active_sh_degree) {
            ids.extend((0..3).map(|c| ParamId::Sh(i, k, c)));
        }
    }
    ids
}

/// Central-difference step for a parameter of value `x`.
pub fn fd_step(x: f64, step: f64) -> f64 {
    step * x.abs().max(1.0)
}

/// Central difference of `loss` with respect to one parameter.
pub fn finite_difference<F>(model: &SplatModel, cam: &CameraModel, loss: &F, id: ParamId, step: f64) -> f64
where
    F: Fn(&SplatModel, &CameraModel) -> f64,
{
    let x = id.get(model);
    let h = fd_step(x, step);
    let mut m = model.clone();
    id.set(&mut m, x + h);
    let fp = loss(&m, cam);
    id.set(&mut m, x - h);
    let fm = loss(&m, cam);
    (fp - fm) / (2.0 * h)
}

/// Central differences of `loss` with respect to every parameter listed by
/// [`parameter_ids`]. `screen_grad_norm` is left at zero.
pub fn finite_difference_oracle<F>(model: &SplatModel, cam: &CameraModel, loss: F, step: f64) -> ParamGrads
where
    F: Fn(&SplatModel, &CameraModel) -> f64,
{
    let mut out = ParamGrads::zeros(model.len());
    for id in parameter_ids(model) {
        out.set(id, finite_difference(model, cam, &loss, id, step));
    }
    out
}

/// `|a - f| / max(|a|, |f|, floor)`
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gaussian_value, Mat4, Vec3};
    use crate::sh::rgb_to_dc;

    fn one_splat() -> (SplatModel, CameraModel) {
        let mut m = SplatModel::new(0);
        let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
        sh[0] = [rgb_to_dc(0.5); 3];
        m.push(Vec3::new(0.3, -0.2, 1.5), [1.0, 0.0, 0.0, 0.0], [0.4, 0.7], 0.5, sh);
        let cam = CameraModel::new(10.0, 10.0, 8.0, 8.0, 16, 16, Mat4::identity(), 0.2, 1000.0).unwrap();
        (m, cam)
    }

    #[test]
    fn quadratic_derivative_is_exact() {
        let (m, cam) = one_splat();
        let loss = |m: &SplatModel, _: &CameraModel| 3.0 * m.centers[0][0].powi(2) - m.centers[0][0];
        let g = finite_difference_oracle(&m, &cam, loss, 1e-4);
        let x = m.centers[0][0];
        assert!((g.d_center[0][0] - (6.0 * x - 1.0)).abs() < 1e-9);
        assert_eq!(g.d_center[0][1], 0.0);
    }

    #[test]
    fn gaussian_value_derivative_matches_closed_form() {
        let (m, cam) = one_splat();
        // treat the center x coordinate as u
        let loss = |m: &SplatModel, _: &CameraModel| gaussian_value(m.centers[0][0], 0.0);
        let g = finite_difference_oracle(&m, &cam, loss, 1e-6);
        let u = m.centers[0][0];
        let want = -u * gaussian_value(u, 0.0);
        assert!((g.d_center[0][0] - want).abs() < 1e-9);
    }

    #[test]
    fn parameter_ids_cover_active_sh_only() {
        let (mut m, _) = one_splat();
        assert_eq!(parameter_ids(&m).len(), 3 + 4 + 2 + 1 + 3);
        m.sh_degree = 3;
        m.active_sh_degree = 1;
        assert_eq!(parameter_ids(&m).len(), 3 + 4 + 2 + 1 + 12);
    }

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-8), 0.0);
        assert!((relative_error(1e-12, 0.0, 1e-6) - 1e-6).abs() < 1e-18);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
    }
}
