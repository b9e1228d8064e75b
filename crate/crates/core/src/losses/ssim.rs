//! Structural similarity with an 11×11 Gaussian window (σ = 1.5) and zero
//! padding, plus its gradient with respect to the first image.

use crate::error::Result;
use crate::imgbuf::RgbImage;

pub const WINDOW: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

pub fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let r = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "same" convolution with zero padding. The kernel is symmetric,
/// so this operator is self-adjoint.
fn blur(src: &[f64], width: usize, height: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let r = (WINDOW / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let sx = x as isize + i as isize - r;
                if sx >= 0 && (sx as usize) < width {
                    acc += kv * row[sx as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let sy = y as isize + i as isize - r;
                if sy >= 0 && (sy as usize) < height {
                    acc += kv * tmp[sy as usize * width + x];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn channel(img: &RgbImage, c: usize) -> Vec<f64> {
    img.data.iter().map(|p| p[c]).collect()
}

/// Mean SSIM over pixels and channels, and optionally its gradient with
/// respect to `a`.
fn ssim_impl(a: &RgbImage, b: &RgbImage, want_grad: bool) -> Result<(f64, Option<Vec<[f64; 3]>>)> {
    a.ensure_same_size(b)?;
    let (w, h) = (a.width, a.height);
    let k = gaussian_kernel();
    let n = (w * h * 3) as f64;
    let mut total = 0.0;
    let mut grad = want_grad.then(|| vec![[0.0; 3]; w * h]);
    for c in 0..3 {
        let x = channel(a, c);
        let y = channel(b, c);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mu_x = blur(&x, w, h, &k);
        let mu_y = blur(&y, w, h, &k);
        let e_xx = blur(&xx, w, h, &k);
        let e_yy = blur(&yy, w, h, &k);
        let e_xy = blur(&xy, w, h, &k);
        let mut d_mu = vec![0.0; w * h];
        let mut d_xx = vec![0.0; w * h];
        let mut d_xy = vec![0.0; w * h];
        for i in 0..w * h {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let a1 = 2.0 * mx * my + C1;
            let a2 = 2.0 * (e_xy[i] - mx * my) + C2;
            let b1 = mx * mx + my * my + C1;
            let b2 = (e_xx[i] - mx * mx) + (e_yy[i] - my * my) + C2;
            let s = a1 * a2 / (b1 * b2);
            total += s;
            if want_grad {
                d_mu[i] = ((2.0 * my * a2 - 2.0 * my * a1) / (b1 * b2) - s * (2.0 * mx / b1 - 2.0 * mx / b2)) / n;
                d_xx[i] = -s / b2 / n;
                d_xy[i] = 2.0 * a1 / (b1 * b2) / n;
            }
        }
        if let Some(g) = grad.as_mut() {
            let g_mu = blur(&d_mu, w, h, &k);
            let g_xx = blur(&d_xx, w, h, &k);
            let g_xy = blur(&d_xy, w, h, &k);
            for i in 0..w * h {
                g[i][c] = g_mu[i] + 2.0 * x[i] * g_xx[i] + y[i] * g_xy[i];
            }
        }
    }
    Ok((total / n, grad))
}

pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    Ok(ssim_impl(a, b, false)?.0)
}

/// SSIM and its gradient with respect to `a`.
pub fn ssim_with_grad(a: &RgbImage, b: &RgbImage) -> Result<(f64, Vec<[f64; 3]>)> {
    let (v, g) = ssim_impl(a, b, true)?;
    Ok((v, g.expect("gradient requested")))
}

/// `(1 - λ) L1 + λ (1 - SSIM) / 2` and its gradient with respect to
/// `rendered`.
pub fn photometric_loss(rendered: &RgbImage, target: &RgbImage, lambda_ssim: f64) -> Result<(f64, Vec<[f64; 3]>)> {
    rendered.ensure_same_size(target)?;
    let n = (rendered.pixel_count() * 3) as f64;
    let mut l1 = 0.0;
    let mut grad = vec![[0.0; 3]; rendered.pixel_count()];
    for (i, (r, t)) in rendered.data.iter().zip(&target.data).enumerate() {
        for c in 0..3 {
            let d = r[c] - t[c];
            l1 += d.abs();
            let sign = if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 };
            grad[i][c] = (1.0 - lambda_ssim) * sign / n;
        }
    }
    l1 /= n;
    let mut loss = (1.0 - lambda_ssim) * l1;
    if lambda_ssim > 0.0 {
        let (s, gs) = ssim_with_grad(rendered, target)?;
        loss += lambda_ssim * (1.0 - s) / 2.0;
        for (g, d) in grad.iter_mut().zip(&gs) {
            for c in 0..3 {
                g[c] -= lambda_ssim / 2.0 * d[c];
            }
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RgbImage {
        let data = (0..w * h).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        RgbImage::from_data(w, h, data).unwrap()
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..WINDOW {
            assert_eq!(k[i], k[WINDOW - 1 - i]);
        }
    }

    #[test]
    fn identical_images_have_zero_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_image(20, 17, &mut rng);
        let (l, _) = photometric_loss(&a, &a, 0.2).unwrap();
        assert!(l.abs() < 1e-12);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_l1_on_constant_offset() {
        let a = RgbImage::filled(8, 8, [0.5; 3]);
        let b = RgbImage::filled(8, 8, [0.4; 3]);
        let (l, _) = photometric_loss(&a, &b, 0.0).unwrap();
        assert!((l - 0.1).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = RgbImage::new(4, 4);
        let b = RgbImage::new(4, 5);
        assert!(photometric_loss(&a, &b, 0.2).is_err());
    }

    #[test]
    fn photometric_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_image(13, 9, &mut rng);
        let b = random_image(13, 9, &mut rng);
        let (_, g) = photometric_loss(&a, &b, 0.2).unwrap();
        let h = 1e-6;
        for &(i, c) in &[(0usize, 0usize), (17, 1), (50, 2), (116, 0), (64, 1)] {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap.data[i][c] += h;
            am.data[i][c] -= h;
            let fd = (photometric_loss(&ap, &b, 0.2).unwrap().0 - photometric_loss(&am, &b, 0.2).unwrap().0) / (2.0 * h);
            assert!((fd - g[i][c]).abs() < 1e-6 * fd.abs().max(1e-3), "pixel {i} ch {c}: fd {fd} vs {}", g[i][c]);
        }
    }
}
