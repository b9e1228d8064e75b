//! Image quality metrics on linear `[0, 1]` images.

use crate::error::Result;
use crate::imgbuf::RgbImage;

/// Reported in place of `+∞` for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    a.ensure_same_size(b)?;
    let s: f64 = a.data.iter().zip(&b.data).flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).powi(2))).sum();
    Ok(s / (a.pixel_count() * 3) as f64)
}

/// `10 log10(1 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m > 0.0 { (-10.0 * m.log10()).min(PSNR_CAP) } else { PSNR_CAP })
}

pub use crate::losses::ssim;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{gaussian_kernel, C1, C2, WINDOW};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
        let data = (0..w * h).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        RgbImage::from_data(w, h, data).unwrap()
    }

    /// Direct 2D-window SSIM with zero padding.
    fn reference_ssim(a: &RgbImage, b: &RgbImage) -> f64 {
        let k1 = gaussian_kernel();
        let r = (WINDOW / 2) as isize;
        let (w, h) = (a.width as isize, a.height as isize);
        let mut total = 0.0;
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for j in -r..=r {
                        for i in -r..=r {
                            let (px, py) = (x + i, y + j);
                            if px < 0 || py < 0 || px >= w || py >= h {
                                continue;
                            }
                            let wt = k1[(i + r) as usize] * k1[(j + r) as usize];
                            let p = a.get(px as usize, py as usize)[c];
                            let q = b.get(px as usize, py as usize)[c];
                            mx += wt * p;
                            my += wt * q;
                            sxx += wt * p * p;
                            syy += wt * q * q;
                            sxy += wt * p * q;
                        }
                    }
                    let (vx, vy, cxy) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                    total += (2.0 * mx * my + C1) * (2.0 * cxy + C2) / ((mx * mx + my * my + C1) * (vx + vy + C2));
                }
            }
        }
        total / (a.width * a.height * 3) as f64
    }

    #[test]
    fn identical_images_are_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_image(&mut rng, 12, 9);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_difference_of_a_tenth_is_20_db() {
        let a = RgbImage::filled(8, 8, [0.3, 0.5, 0.7]);
        let b = RgbImage::filled(8, 8, [0.4, 0.6, 0.8]);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_matches_direct_window_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (w, h) in [(16, 16), (23, 9), (5, 30)] {
            let a = random_image(&mut rng, w, h);
            let b = random_image(&mut rng, w, h);
            let fast = ssim(&a, &b).unwrap();
            let slow = reference_ssim(&a, &b);
            assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
        }
    }

    #[test]
    fn psnr_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_image(&mut rng, 10, 10);
        let b = random_image(&mut rng, 10, 10);
        let mut s = 0.0;
        for i in 0..100 {
            for c in 0..3 {
                s += (a.data[i][c] - b.data[i][c]).powi(2);
            }
        }
        let expected = 10.0 * (1.0 / (s / 300.0)).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() <= 1e-9);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(psnr(&RgbImage::new(2, 2), &RgbImage::new(3, 2)).is_err());
        assert!(ssim(&RgbImage::new(2, 2), &RgbImage::new(2, 3)).is_err());
    }
}
