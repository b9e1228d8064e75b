//! Real spherical harmonics up to degree 3, in the sign convention used by
//! Gaussian-splatting renderers.

use crate::geometry::Vec3;

pub const MAX_SH_DEGREE: usize = 3;
pub const MAX_SH_COEFFS: usize = 16;

pub const SH_C0: f64 = 0.28209479177387814;
pub const SH_C1: f64 = 0.4886025119029199;
pub const SH_C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
pub const SH_C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

/// Per-primitive coefficients, indexed `[basis][channel]`.
pub type ShCoeffs = [[f64; 3]; MAX_SH_COEFFS];

pub const fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// DC coefficient reproducing `rgb` when all higher bands are zero.
pub fn rgb_to_dc(rgb: f64) -> f64 {
    (rgb - 0.5) / SH_C0
}

/// Basis values and their gradients with respect to the (unnormalized)
/// components of a unit direction.
pub fn basis_with_grad(dir: &Vec3, degree: usize) -> ([f64; MAX_SH_COEFFS], [[f64; 3]; MAX_SH_COEFFS]) {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut b = [0.0; MAX_SH_COEFFS];
    let mut g = [[0.0; 3]; MAX_SH_COEFFS];
    b[0] = SH_C0;
    if degree >= 1 {
        b[1] = -SH_C1 * y;
        b[2] = SH_C1 * z;
        b[3] = -SH_C1 * x;
        g[1] = [0.0, -SH_C1, 0.0];
        g[2] = [0.0, 0.0, SH_C1];
        g[3] = [-SH_C1, 0.0, 0.0];
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = SH_C2[0] * x * y;
        b[5] = SH_C2[1] * y * z;
        b[6] = SH_C2[2] * (2.0 * zz - xx - yy);
        b[7] = SH_C2[3] * x * z;
        b[8] = SH_C2[4] * (xx - yy);
        g[4] = [SH_C2[0] * y, SH_C2[0] * x, 0.0];
        g[5] = [0.0, SH_C2[1] * z, SH_C2[1] * y];
        g[6] = [-2.0 * SH_C2[2] * x, -2.0 * SH_C2[2] * y, 4.0 * SH_C2[2] * z];
        g[7] = [SH_C2[3] * z, 0.0, SH_C2[3] * x];
        g[8] = [2.0 * SH_C2[4] * x, -2.0 * SH_C2[4] * y, 0.0];
    }
    if degree >= 3 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[9] = SH_C3[0] * y * (3.0 * xx - yy);
        b[10] = SH_C3[1] * x * y * z;
        b[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
        b[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
        b[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
        b[14] = SH_C3[5] * z * (xx - yy);
        b[15] = SH_C3[6] * x * (xx - 3.0 * yy);
        g[9] = [SH_C3[0] * 6.0 * x * y, SH_C3[0] * (3.0 * xx - 3.0 * yy), 0.0];
        g[10] = [SH_C3[1] * y * z, SH_C3[1] * x * z, SH_C3[1] * x * y];
        g[11] = [-2.0 * SH_C3[2] * x * y, SH_C3[2] * (4.0 * zz - xx - 3.0 * yy), 8.0 * SH_C3[2] * y * z];
        g[12] = [-6.0 * SH_C3[3] * x * z, -6.0 * SH_C3[3] * y * z, SH_C3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy)];
        g[13] = [SH_C3[4] * (4.0 * zz - 3.0 * xx - yy), -2.0 * SH_C3[4] * x * y, 8.0 * SH_C3[4] * x * z];
        g[14] = [2.0 * SH_C3[5] * x * z, -2.0 * SH_C3[5] * y * z, SH_C3[5] * (xx - yy)];
        g[15] = [SH_C3[6] * (3.0 * xx - 3.0 * yy), -6.0 * SH_C3[6] * x * y, 0.0];
    }
    (b, g)
}

/// View-dependent color for a unit viewing direction, offset by 0.5 and
/// clamped at zero. The returned mask marks channels that were not clamped.
pub fn eval_color(coeffs: &ShCoeffs, degree: usize, dir: &Vec3) -> ([f64; 3], [bool; 3]) {
    let (b, _) = basis_with_grad(dir, degree);
    let mut rgb = [0.0; 3];
    let mut mask = [true; 3];
    for c in 0..3 {
        let mut acc = 0.0;
        for k in 0..coeff_count(degree) {
            acc += b[k] * coeffs[k][c];
        }
        let v = acc + 0.5;
        mask[c] = v > 0.0;
        rgb[c] = v.max(0.0);
    }
    (rgb, mask)
}

/// Backward of [`eval_color`] with respect to the coefficients and the
/// unnormalized direction `d` (the view direction is `d / |d|`).
pub fn eval_color_backward(
    coeffs: &ShCoeffs,
    degree: usize,
    d: &Vec3,
    mask: [bool; 3],
    d_rgb: [f64; 3],
    d_coeffs: &mut ShCoeffs,
) -> Vec3 {
    let len = d.norm();
    let dir = d / len;
    let (b, g) = basis_with_grad(&dir, degree);
    let mut d_dir = Vec3::zeros();
    for c in 0..3 {
        if !mask[c] {
            continue;
        }
        for k in 0..coeff_count(degree) {
            d_coeffs[k][c] += b[k] * d_rgb[c];
            let s = coeffs[k][c] * d_rgb[c];
            d_dir += Vec3::new(g[k][0], g[k][1], g[k][2]) * s;
        }
    }
    // d(d/|d|)/dd = (I - dir dirᵀ) / |d|
    (d_dir - dir * dir.dot(&d_dir)) / len
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_round_trip() {
        let mut c = [[0.0; 3]; MAX_SH_COEFFS];
        c[0] = [rgb_to_dc(0.2), rgb_to_dc(0.5), rgb_to_dc(0.9)];
        let (rgb, mask) = eval_color(&c, 3, &Vec3::new(0.3, -0.2, 0.9).normalize());
        for (got, want) in rgb.iter().zip([0.2, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(mask, [true; 3]);
    }

    #[test]
    fn basis_gradient_matches_finite_differences() {
        let p = Vec3::new(0.3, -0.5, 0.7);
        let (_, g) = basis_with_grad(&p, 3);
        let h = 1e-6;
        for axis in 0..3 {
            let mut a = p;
            let mut b = p;
            a[axis] += h;
            b[axis] -= h;
            let (ba, _) = basis_with_grad(&a, 3);
            let (bb, _) = basis_with_grad(&b, 3);
            for k in 0..MAX_SH_COEFFS {
                let fd = (ba[k] - bb[k]) / (2.0 * h);
                assert!((fd - g[k][axis]).abs() < 1e-8, "basis {k} axis {axis}: {fd} vs {}", g[k][axis]);
            }
        }
    }

    #[test]
    fn basis_matches_polar_definition_for_dipole() {
        // Y_1^0 ∝ cos(theta)
        let (b, _) = basis_with_grad(&Vec3::z(), 1);
        assert!((b[2] - SH_C1).abs() < 1e-15);
        let (b, _) = basis_with_grad(&-Vec3::z(), 1);
        assert!((b[2] + SH_C1).abs() < 1e-15);
    }

    #[test]
    fn clamped_channel_is_masked() {
        let mut c = [[0.0; 3]; MAX_SH_COEFFS];
        c[0] = [rgb_to_dc(-0.3), 0.0, 0.0];
        let (rgb, mask) = eval_color(&c, 0, &Vec3::z());
        assert_eq!(rgb[0], 0.0);
        assert_eq!(mask, [false, true, true]);
    }
}
