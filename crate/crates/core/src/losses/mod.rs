//! Training objectives: photometric reconstruction, depth distortion and
//! normal consistency.

mod ssim;

pub use ssim::{gaussian_kernel, photometric_loss, ssim, ssim_with_grad, C1, C2, WINDOW, WINDOW_SIGMA};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{CameraModel, Vec3};
use crate::gradients::UpstreamGrads;
use crate::imgbuf::RgbImage;
use crate::rasterizer::RenderOutput;

/// Weights of the regularizers. Defaults are the bounded-scene values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha_d: f64,
    pub beta_n: f64,
    pub lambda_ssim: f64,
}

impl LossWeights {
    pub const BOUNDED: Self = Self { alpha_d: 1000.0, beta_n: 0.05, lambda_ssim: 0.2 };
    pub const UNBOUNDED: Self = Self { alpha_d: 100.0, beta_n: 0.05, lambda_ssim: 0.2 };
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::BOUNDED
    }
}

/// Running weight, weighted mean and weighted centered second moment of a
/// ray's NDC depths. `Σ_j ω_j (m - m_j)² = A (m - μ)² + S`, which avoids
/// the cancellation of expanding the square into raw moments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DistortionAccumulators {
    /// `A = Σ ω_j`
    pub a: f64,
    /// `μ = Σ ω_j m_j / A`, zero while `A = 0`
    pub mean: f64,
    /// `S = Σ ω_j (m_j - μ)²`
    pub s: f64,
}

impl DistortionAccumulators {
    /// `Σ_j ω_j (m - m_j)²` over everything pushed so far.
    pub fn term(&self, m: f64) -> f64 {
        let d = m - self.mean;
        self.a * d * d + self.s
    }

    /// `Σ_j ω_j (m - m_j)`, half the derivative of [`Self::term`].
    pub fn first_moment(&self, m: f64) -> f64 {
        self.a * (m - self.mean)
    }

    pub fn push(&mut self, w: f64, m: f64) {
        let a = self.a + w;
        if a <= 0.0 {
            return;
        }
        let d = m - self.mean;
        let mean = self.mean + d * (w / a);
        self.s += w * d * (m - mean);
        self.mean = mean;
        self.a = a;
    }
}

/// Maps camera depth to `[0, 1]` between the near and far planes.
pub fn ndc_depth(z: f64, near: f64, far: f64) -> f64 {
    far * (z - near) / (z * (far - near))
}

/// `d ndc_depth / dz`.
pub fn ndc_depth_derivative(z: f64, near: f64, far: f64) -> f64 {
    far * near / ((far - near) * z * z)
}

/// `Σ_i Σ_{j<i} ω_i ω_j (m_i - m_j)²` in one front-to-back pass.
pub fn distortion_single_pass(weights: &[f64], m: &[f64]) -> f64 {
    let mut acc = DistortionAccumulators::default();
    let mut loss = 0.0;
    for (&w, &mi) in weights.iter().zip(m) {
        loss += w * acc.term(mi);
        acc.push(w, mi);
    }
    loss
}

/// Gradients of [`distortion_single_pass`] with respect to every weight and
/// depth, from the ray totals.
pub fn distortion_grads(weights: &[f64], m: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut total = DistortionAccumulators::default();
    for (&w, &mi) in weights.iter().zip(m) {
        total.push(w, mi);
    }
    let d_w = m.iter().map(|&mi| total.term(mi)).collect();
    let d_m = weights.iter().zip(m).map(|(&w, &mi)| 2.0 * w * total.first_moment(mi)).collect();
    (d_w, d_m)
}

/// Mean over pixels of the rendered distortion channel, with the matching
/// upstream gradient.
pub fn depth_distortion_loss(out: &RenderOutput) -> (f64, Vec<f64>) {
    let n = out.pixel_count() as f64;
    let value = out.distortion.iter().sum::<f64>() / n;
    (value, vec![1.0 / n; out.pixel_count()])
}

/// Normals of the median-depth surface by central differences of the
/// unprojected depth map, oriented towards the camera. `None` where the
/// pixel is skipped.
pub fn depth_normals(out: &RenderOutput, cam: &CameraModel) -> Vec<Option<Vec3>> {
    let (w, h) = (out.width, out.height);
    let center = cam.center();
    let point = |x: usize, y: usize| cam.unproject(x as f64 + 0.5, y as f64 + 0.5, out.median_depth[y * w + x]);
    let mut normals = vec![None; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            if out.alpha[i] < 0.5 || out.median_depth[i] <= 0.0 {
                continue;
            }
            let neighbors = [i - 1, i + 1, i - w, i + w];
            if neighbors.iter().any(|&j| out.median_depth[j] <= 0.0) {
                continue;
            }
            let dx = point(x + 1, y) - point(x - 1, y);
            let dy = point(x, y + 1) - point(x, y - 1);
            let nrm = dx.cross(&dy);
            let len = nrm.norm();
            if !(len > 0.0) {
                continue;
            }
            let mut nrm = nrm / len;
            if nrm.dot(&(point(x, y) - center)) > 0.0 {
                nrm = -nrm;
            }
            normals[i] = Some(nrm);
        }
    }
    normals
}

/// `mean_pixels Σ_i ω_i (1 - n_iᵀ N)` with `N` held constant.
///
/// Per pixel the sum equals `A - (Σ ω_i n_i) · N`, so the gradient only
/// touches the alpha and normal-sum channels. Returns the loss and the
/// upstream gradients for those two channels.
pub fn normal_consistency_loss_with(
    out: &RenderOutput,
    normals: &[Option<Vec3>],
) -> (f64, Vec<f64>, Vec<[f64; 3]>) {
    let n = out.pixel_count() as f64;
    let mut value = 0.0;
    let mut d_alpha = vec![0.0; out.pixel_count()];
    let mut d_sum = vec![[0.0; 3]; out.pixel_count()];
    for (i, nrm) in normals.iter().enumerate() {
        let Some(nrm) = nrm else { continue };
        let s = Vec3::from(out.normal_sum[i]);
        value += out.alpha[i] - s.dot(nrm);
        d_alpha[i] = 1.0 / n;
        d_sum[i] = [-nrm.x / n, -nrm.y / n, -nrm.z / n];
    }
    (value / n, d_alpha, d_sum)
}

pub fn normal_consistency_loss(out: &RenderOutput, cam: &CameraModel) -> (f64, Vec<f64>, Vec<[f64; 3]>) {
    normal_consistency_loss_with(out, &depth_normals(out, cam))
}

/// Loss terms of one render. `total = photometric + α distortion + β normal`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub photometric: f64,
    pub distortion: f64,
    pub normal: f64,
    pub total: f64,
}

pub fn total_loss(photometric: f64, distortion: f64, normal: f64, weights: &LossWeights) -> LossBreakdown {
    LossBreakdown {
        photometric,
        distortion,
        normal,
        total: photometric + weights.alpha_d * distortion + weights.beta_n * normal,
    }
}

/// Which regularizers contribute to the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossTerms {
    pub distortion: bool,
    pub normal: bool,
}

impl Default for LossTerms {
    fn default() -> Self {
        Self { distortion: true, normal: true }
    }
}

/// Evaluates the full objective on a render and the upstream gradient of
/// the weighted total with respect to every channel. Disabled terms are
/// still reported but carry no gradient and no weight.
///
/// When `normals` is given it is used as the (stop-gradient) depth normal
/// field instead of being estimated from this render.
pub fn compute_losses(
    out: &RenderOutput,
    target: &RgbImage,
    cam: &CameraModel,
    weights: &LossWeights,
    terms: LossTerms,
    normals: Option<&[Option<Vec3>]>,
) -> Result<(LossBreakdown, UpstreamGrads)> {
    let rendered = RgbImage::from_data(out.width, out.height, out.color.clone())?;
    let (l_c, d_color) = photometric_loss(&rendered, target, weights.lambda_ssim)?;
    let (l_d, d_dist) = depth_distortion_loss(out);
    let estimated;
    let normals = match normals {
        Some(n) => n,
        None => {
            estimated = depth_normals(out, cam);
            &estimated
        }
    };
    let (l_n, d_alpha, d_sum) = normal_consistency_loss_with(out, normals);
    let effective = LossWeights {
        alpha_d: if terms.distortion { weights.alpha_d } else { 0.0 },
        beta_n: if terms.normal { weights.beta_n } else { 0.0 },
        ..*weights
    };
    let breakdown = total_loss(l_c, l_d, l_n, &effective);
    let mut up = UpstreamGrads::zeros(out.pixel_count());
    up.color = d_color;
    if effective.alpha_d > 0.0 {
        up.distortion = d_dist.iter().map(|g| g * effective.alpha_d).collect();
    }
    if effective.beta_n > 0.0 {
        up.alpha = d_alpha.iter().map(|g| g * effective.beta_n).collect();
        up.normal_sum = d_sum.iter().map(|g| [g[0] * effective.beta_n, g[1] * effective.beta_n, g[2] * effective.beta_n]).collect();
    }
    Ok((breakdown, up))
}
