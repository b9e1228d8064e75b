//! Surfel primitives, pinhole cameras and the homogeneous ray-splat
//! intersection.
//!
//! A splat is a flat Gaussian disk `P(u, v) = p + s_u t_u u + s_v t_v v`.
//! A pixel ray is the intersection of two screen planes `h_x`, `h_y`. Both
//! planes are pulled back into the splat's `uv` space with the transpose of
//! the screen-from-uv transform, which avoids inverting a matrix that
//! becomes singular for edge-on splats.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;

/// Screen-space radius of the object-space low-pass filter, in pixels.
pub const LOW_PASS_SIGMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Bounding ellipses cover the splat out to this many standard deviations.
pub const DEFAULT_K_SIGMA: f64 = 3.0;

/// Relative threshold of the intersection denominator below which a
/// ray-splat intersection is treated as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-9;

const FRAME_TOL: f64 = 1e-6;

/// Rotation matrix of a (not necessarily normalized) quaternion `(w, x, y, z)`.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Unit quaternion `(w, x, y, z)` of a proper rotation matrix.
pub fn quaternion_from_rotation(r: &Mat3) -> [f64; 4] {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(*r);
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
    [q.w, q.i, q.j, q.k]
}

/// Geometry of one 2D Gaussian: center, orthonormal tangent frame and the
/// two in-plane standard deviations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatGeometry {
    pub center: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
    pub scale_u: f64,
    pub scale_v: f64,
}

impl SplatGeometry {
    pub fn new(center: Vec3, tangent_u: Vec3, tangent_v: Vec3, scale_u: f64, scale_v: f64) -> Result<Self> {
        let g = Self { center, tangent_u, tangent_v, scale_u, scale_v };
        g.validate()?;
        Ok(g)
    }

    /// Builds the frame from the first two columns of the quaternion's rotation.
    pub fn from_quaternion(center: Vec3, q: [f64; 4], scale_u: f64, scale_v: f64) -> Self {
        let r = rotation_from_quaternion(q);
        Self {
            center,
            tangent_u: r.column(0).into_owned(),
            tangent_v: r.column(1).into_owned(),
            scale_u,
            scale_v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().chain(self.tangent_u.iter()).chain(self.tangent_v.iter()).all(|v| v.is_finite());
        if !finite || !self.scale_u.is_finite() || !self.scale_v.is_finite() {
            return Err(Error::InvalidGeometry("non-finite component".into()));
        }
        if (self.tangent_u.norm() - 1.0).abs() > FRAME_TOL || (self.tangent_v.norm() - 1.0).abs() > FRAME_TOL {
            return Err(Error::InvalidGeometry("tangent vectors must be unit length".into()));
        }
        if self.tangent_u.dot(&self.tangent_v).abs() > FRAME_TOL {
            return Err(Error::InvalidGeometry("tangent vectors must be orthogonal".into()));
        }
        if self.scale_u <= 0.0 || self.scale_v <= 0.0 {
            return Err(Error::InvalidGeometry("scales must be positive".into()));
        }
        Ok(())
    }

    /// Surface normal `t_u × t_v`.
    pub fn normal(&self) -> Vec3 {
        self.tangent_u.cross(&self.tangent_v)
    }

    /// World point at tangent coordinates `(u, v)`.
    pub fn point_at(&self, u: f64, v: f64) -> Vec3 {
        self.center + self.tangent_u * (self.scale_u * u) + self.tangent_v * (self.scale_v * v)
    }
}

/// Pinhole camera with a rigid world-to-camera transform. Camera space is
/// x right, y down, z forward.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub world_to_camera: Mat4,
    pub near: f64,
    pub far: f64,
}

impl CameraModel {
    /// Default near/far planes of the depth normalization.
    pub const DEFAULT_NEAR: f64 = 0.2;
    pub const DEFAULT_FAR: f64 = 1000.0;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        world_to_camera: Mat4,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, width, height, world_to_camera, near, far };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`, with `up` roughly pointing up in
    /// the image.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, focal: f64, width: usize, height: usize) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-12 {
            return Err(Error::InvalidCamera("up vector parallel to viewing direction".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let r = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let t = -(r * eye);
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Self::new(
            focal,
            focal,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            m,
            Self::DEFAULT_NEAR,
            Self::DEFAULT_FAR,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rotation();
        let ortho = (r.transpose() * r - Mat3::identity()).abs().max();
        if !ortho.is_finite() || ortho > FRAME_TOL {
            return Err(Error::InvalidCamera("rotation block is not orthonormal".into()));
        }
        if (r.determinant() - 1.0).abs() > FRAME_TOL {
            return Err(Error::InvalidCamera("rotation block must have determinant +1".into()));
        }
        let bottom = self.world_to_camera.row(3);
        if bottom[0] != 0.0 || bottom[1] != 0.0 || bottom[2] != 0.0 || bottom[3] != 1.0 {
            return Err(Error::InvalidCamera("last row of world_to_camera must be (0, 0, 0, 1)".into()));
        }
        if !(self.near > 0.0 && self.far > self.near) {
            return Err(Error::InvalidCamera(format!("need 0 < near < far, got near={} far={}", self.near, self.far)));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("focal lengths and image size must be positive".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Mat3 {
        self.world_to_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vec3 {
        self.world_to_camera.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Upper-left 3×3 intrinsic matrix.
    pub fn intrinsics(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation().transpose() * self.translation())
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation() * p + self.translation()
    }

    /// Pixel coordinates and camera depth of a world point.
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let c = self.to_camera(p);
        (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z)
    }

    /// World-space origin and unit direction of the ray through pixel
    /// coordinates `(x, y)` (pixel centers sit at half-integers).
    pub fn ray(&self, x: f64, y: f64) -> (Vec3, Vec3) {
        let d_cam = Vec3::new((x - self.cx) / self.fx, (y - self.cy) / self.fy, 1.0);
        let d = self.rotation().transpose() * d_cam;
        (self.center(), d.normalize())
    }

    /// World point seen at pixel coordinates `(x, y)` with camera depth `z`.
    pub fn unproject(&self, x: f64, y: f64, z: f64) -> Vec3 {
        let c = Vec3::new((x - self.cx) / self.fx * z, (y - self.cy) / self.fy * z, z);
        self.rotation().transpose() * (c - self.translation())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Plane `{q : (a, b, c, d) · (q, 1) = 0}` in homogeneous form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousPlane(pub Vector4<f64>);

impl HomogeneousPlane {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self(Vector4::new(a, b, c, d))
    }

    /// Evaluates the plane on a homogeneous point.
    pub fn apply(&self, point: &Vector4<f64>) -> f64 {
        self.0.dot(point)
    }

    /// Component with 1-based index, matching the closed-form notation.
    fn c(&self, i: usize) -> f64 {
        self.0[i - 1]
    }
}

/// Result of a successful ray-splat intersection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayIntersection {
    pub u: f64,
    pub v: f64,
    pub z: f64,
    pub gaussian: f64,
}

/// The pixel ray lies (numerically) in the splat plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Degenerate;

impl std::fmt::Display for Degenerate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("degenerate ray-splat intersection")
    }
}

impl std::error::Error for Degenerate {}

/// Homogeneous uv-to-world transform of a splat: columns `(s_u t_u, 0)`,
/// `(s_v t_v, 0)`, `0`, `(p, 1)`.
pub fn build_splat_transform(g: &SplatGeometry) -> Mat4 {
    let mut h = Mat4::zeros();
    h.fixed_view_mut::<3, 1>(0, 0).copy_from(&(g.tangent_u * g.scale_u));
    h.fixed_view_mut::<3, 1>(0, 1).copy_from(&(g.tangent_v * g.scale_v));
    h.fixed_view_mut::<3, 1>(0, 3).copy_from(&g.center);
    h[(3, 3)] = 1.0;
    h
}

/// World-to-screen transform mapping a world point to `(x z, y z, z, z)`
/// with `(x, y)` in pixels.
pub fn world_to_screen(cam: &CameraModel) -> Mat4 {
    let k = Mat4::new(
        cam.fx, 0.0, cam.cx, 0.0, //
        0.0, cam.fy, cam.cy, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    );
    k * cam.world_to_camera
}

/// The x- and y-planes whose intersection is the ray through `(x, y)`.
pub fn pixel_planes(x: f64, y: f64) -> (HomogeneousPlane, HomogeneousPlane) {
    (HomogeneousPlane::new(-1.0, 0.0, 0.0, x), HomogeneousPlane::new(0.0, -1.0, 0.0, y))
}

/// Pulls the screen planes back to the splat's uv space: `h = (W H)ᵀ h_screen`.
pub fn transform_planes(
    w: &Mat4,
    h: &Mat4,
    h_x: &HomogeneousPlane,
    h_y: &HomogeneousPlane,
) -> (HomogeneousPlane, HomogeneousPlane) {
    let m = (w * h).transpose();
    (HomogeneousPlane(m * h_x.0), HomogeneousPlane(m * h_y.0))
}

/// Closed-form solution of `h_u · (u, v, 1, 1) = h_v · (u, v, 1, 1) = 0`.
pub fn intersect(h_u: &HomogeneousPlane, h_v: &HomogeneousPlane) -> Result<(f64, f64), Degenerate> {
    let num_u = (h_u.c(2) * h_v.c(4), h_u.c(4) * h_v.c(2));
    let num_v = (h_u.c(4) * h_v.c(1), h_u.c(1) * h_v.c(4));
    let denom = h_u.c(1) * h_v.c(2) - h_u.c(2) * h_v.c(1);
    let scale = num_u.0.abs().max(num_u.1.abs()).max(num_v.0.abs()).max(num_v.1.abs());
    if !(denom.abs() > DEGENERATE_EPS * scale) {
        return Err(Degenerate);
    }
    Ok(((num_u.0 - num_u.1) / denom, (num_v.0 - num_v.1) / denom))
}

/// Camera depth of the uv point `(u, v)`: third component of `W H (u, v, 1, 1)`.
pub fn intersection_depth(w: &Mat4, h: &Mat4, u: f64, v: f64) -> f64 {
    (w * h * Vector4::new(u, v, 1.0, 1.0))[2]
}

pub fn gaussian_value(u: f64, v: f64) -> f64 {
    (-(u * u + v * v) / 2.0).exp()
}

/// Screen-space low-pass term `exp(-|pixel - center|² / 2σ²)`.
pub fn low_pass_value(pixel: [f64; 2], center: [f64; 2], sigma: f64) -> f64 {
    let dx = pixel[0] - center[0];
    let dy = pixel[1] - center[1];
    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
}

/// Object-space low-pass filtered Gaussian: the larger of the ray-splat
/// value and the screen-space term.
pub fn filtered_value(g_intersect: f64, pixel: [f64; 2], center: [f64; 2], sigma: f64) -> f64 {
    g_intersect.max(low_pass_value(pixel, center, sigma))
}

/// Full ray-splat pipeline for one pixel center, returning `None` when the
/// intersection is degenerate or lies behind the camera.
pub fn ray_splat(g: &SplatGeometry, cam: &CameraModel, x: f64, y: f64) -> Option<RayIntersection> {
    let w = world_to_screen(cam);
    let h = build_splat_transform(g);
    let (hx, hy) = pixel_planes(x, y);
    let (hu, hv) = transform_planes(&w, &h, &hx, &hy);
    let (u, v) = intersect(&hu, &hv).ok()?;
    let z = intersection_depth(&w, &h, u, v);
    (z > 0.0).then(|| RayIntersection { u, v, z, gaussian: gaussian_value(u, v) })
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)` together with the
/// continuous bounds it was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScreenRect {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl ScreenRect {
    /// True when the center of pixel `(px, py)` lies inside.
    #[inline]
    pub fn contains_pixel(&self, px: usize, py: usize) -> bool {
        px >= self.x0 && px < self.x1 && py >= self.y0 && py < self.y1
    }

    pub fn half_extent(&self) -> [f64; 2] {
        [(self.max[0] - self.min[0]) / 2.0, (self.max[1] - self.min[1]) / 2.0]
    }
}

/// Conservative screen rectangle of a splat's `k_sigma` ellipse, dilated by
/// `k_sigma` low-pass radii. Returns `None` (culled) when the center is not
/// beyond the near plane or the rectangle misses the image.
///
/// The ellipse is contained in the tangent-plane square with corners
/// `p ± k s_u t_u ± k s_v t_v`; the projective image of that convex square
/// is bounded by its projected corners as long as all corners are in front
/// of the camera. Otherwise the whole image is used.
pub fn screen_bounds(g: &SplatGeometry, cam: &CameraModel, k_sigma: f64) -> Option<ScreenRect> {
    let (cx, cy, cz) = cam.project(&g.center);
    if !(cz > cam.near) {
        return None;
    }
    let eu = g.tangent_u * (k_sigma * g.scale_u);
    let ev = g.tangent_v * (k_sigma * g.scale_v);
    let mut min = [cx, cy];
    let mut max = [cx, cy];
    let mut full = false;
    for (su, sv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let corner = g.center + eu * su + ev * sv;
        let (x, y, z) = cam.project(&corner);
        if !(z > 1e-9 * cz.max(1.0)) || !x.is_finite() || !y.is_finite() {
            full = true;
            break;
        }
        min = [min[0].min(x), min[1].min(y)];
        max = [max[0].max(x), max[1].max(y)];
    }
    let pad = k_sigma * LOW_PASS_SIGMA;
    let (w, h) = (cam.width as f64, cam.height as f64);
    if full {
        min = [0.0, 0.0];
        max = [w, h];
    } else {
        min = [min[0] - pad, min[1] - pad];
        max = [max[0] + pad, max[1] + pad];
    }
    // pixel i is covered when its center i + 0.5 lies in [min, max]
    let lo = |v: f64, n: f64| (v - 0.5).ceil().clamp(0.0, n) as usize;
    let hi = |v: f64, n: f64| ((v - 0.5).floor() + 1.0).clamp(0.0, n) as usize;
    let rect = ScreenRect { min, max, x0: lo(min[0], w), x1: hi(max[0], w), y0: lo(min[1], h), y1: hi(max[1], h) };
    (rect.x0 < rect.x1 && rect.y0 < rect.y1).then_some(rect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_camera(f: f64, c: f64) -> CameraModel {
        CameraModel::new(f, f, c, c, 128, 128, Mat4::identity(), 0.2, 1000.0).unwrap()
    }

    fn unit_splat() -> SplatGeometry {
        SplatGeometry::new(Vec3::zeros(), Vec3::x(), Vec3::y(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn splat_transform_maps_uv_to_world() {
        let h = build_splat_transform(&unit_splat());
        let p = h * Vector4::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(p, Vector4::new(0.0, 0.0, 0.0, 1.0));
        let p = h * Vector4::new(2.0, 3.0, 1.0, 1.0);
        assert_eq!(p, Vector4::new(2.0, 3.0, 0.0, 1.0));
    }

    #[test]
    fn splat_transform_matches_vector_arithmetic() {
        let tu = Vec3::new(0.0, 0.0, 1.0);
        let tv = Vec3::new(0.0, 1.0, 0.0);
        let g = SplatGeometry::new(Vec3::new(1.0, 1.0, 1.0), tu, tv, 2.0, 0.5).unwrap();
        let p = build_splat_transform(&g) * Vector4::new(1.0, 1.0, 1.0, 1.0);
        let expected = Vec3::new(1.0, 1.0, 1.0) + tu * 2.0 + tv * 0.5;
        assert_abs_diff_eq!(p.xyz(), expected, epsilon = 1e-15);
        assert_eq!(p[3], 1.0);
        // t_u × t_v points along -x: still a valid right-handed frame [t_u, t_v, t_w]
        assert_abs_diff_eq!(g.normal(), Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn invalid_frames_are_rejected() {
        assert!(SplatGeometry::new(Vec3::zeros(), Vec3::x() * 2.0, Vec3::y(), 1.0, 1.0).is_err());
        assert!(SplatGeometry::new(Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0).normalize(), 1.0, 1.0).is_err());
        assert!(SplatGeometry::new(Vec3::zeros(), Vec3::x(), Vec3::y(), 0.0, 1.0).is_err());
    }

    #[test]
    fn world_to_screen_on_axis_and_pinhole() {
        let w = world_to_screen(&identity_camera(1.0, 0.0));
        assert_eq!(w * Vector4::new(0.0, 0.0, 5.0, 1.0), Vector4::new(0.0, 0.0, 5.0, 5.0));
        let w = world_to_screen(&identity_camera(100.0, 64.0));
        let s = w * Vector4::new(1.0, 0.0, 2.0, 1.0);
        assert_abs_diff_eq!(s[0] / s[3], 114.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1] / s[3], 64.0, epsilon = 1e-12);
        assert_eq!(s[2], 2.0);
    }

    #[test]
    fn pixel_planes_substitution() {
        let (hx, hy) = pixel_planes(0.0, 0.0);
        assert_eq!(hx, HomogeneousPlane::new(-1.0, 0.0, 0.0, 0.0));
        assert_eq!(hy, HomogeneousPlane::new(0.0, -1.0, 0.0, 0.0));
        let (hx, hy) = pixel_planes(3.5, 7.5);
        assert_eq!(hx, HomogeneousPlane::new(-1.0, 0.0, 0.0, 3.5));
        assert_eq!(hy, HomogeneousPlane::new(0.0, -1.0, 0.0, 7.5));
    }

    #[test]
    fn transform_planes_identity() {
        let (hx, hy) = pixel_planes(2.0, 0.0);
        let (hu, _) = transform_planes(&Mat4::identity(), &Mat4::identity(), &hx, &hy);
        assert_eq!(hu, HomogeneousPlane::new(-1.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn intersect_closed_form_examples() {
        let (u, v) = intersect(&HomogeneousPlane::new(1.0, 0.0, 0.0, 0.0), &HomogeneousPlane::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        let (u, v) = intersect(&HomogeneousPlane::new(1.0, 0.0, 0.0, -2.0), &HomogeneousPlane::new(0.0, 1.0, 0.0, -3.0)).unwrap();
        assert_eq!((u, v), (2.0, 3.0));
    }

    #[test]
    fn parallel_planes_are_degenerate() {
        let r = intersect(&HomogeneousPlane::new(1.0, 0.0, 0.0, -2.0), &HomogeneousPlane::new(2.0, 0.0, 0.0, -3.0));
        assert_eq!(r, Err(Degenerate));
        let zero = HomogeneousPlane::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(intersect(&zero, &zero), Err(Degenerate));
    }

    #[test]
    fn fronto_parallel_center_ray() {
        let cam = identity_camera(100.0, 64.0);
        let g = SplatGeometry::new(Vec3::new(0.0, 0.0, 5.0), Vec3::x(), Vec3::y(), 0.5, 0.5).unwrap();
        let w = world_to_screen(&cam);
        let h = build_splat_transform(&g);
        let (hx, hy) = pixel_planes(64.0, 64.0);
        let (hu, hv) = transform_planes(&w, &h, &hx, &hy);
        let at_center = Vector4::new(0.0, 0.0, 1.0, 1.0);
        assert_abs_diff_eq!(hu.apply(&at_center), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hv.apply(&at_center), 0.0, epsilon = 1e-12);
        let (u, v) = intersect(&hu, &hv).unwrap();
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(intersection_depth(&w, &h, u, v), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn splat_behind_camera_has_negative_depth() {
        let cam = identity_camera(100.0, 64.0);
        let g = SplatGeometry::new(Vec3::new(0.0, 0.0, -5.0), Vec3::x(), Vec3::y(), 0.5, 0.5).unwrap();
        let w = world_to_screen(&cam);
        let h = build_splat_transform(&g);
        let (hx, hy) = pixel_planes(64.0, 64.0);
        let (hu, hv) = transform_planes(&w, &h, &hx, &hy);
        let (u, v) = intersect(&hu, &hv).unwrap();
        assert!(intersection_depth(&w, &h, u, v) < 0.0);
        assert!(ray_splat(&g, &cam, 64.0, 64.0).is_none());
        assert!(screen_bounds(&g, &cam, 3.0).is_none());
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian_value(0.0, 0.0), 1.0);
        assert_abs_diff_eq!(gaussian_value(1.0, 1.0), 0.36787944117144233, epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_value(2.0, 0.0), 0.1353352832366127, epsilon = 1e-15);
    }

    #[test]
    fn filtered_value_examples() {
        let s = LOW_PASS_SIGMA;
        assert_eq!(filtered_value(0.9, [3.0, 4.0], [3.0, 4.0], s), 1.0);
        assert_abs_diff_eq!(filtered_value(0.0, [s, 0.0], [0.0, 0.0], s), (-0.5f64).exp(), epsilon = 1e-15);
        assert_eq!(filtered_value(0.99, [10.0 * s, 0.0], [0.0, 0.0], s), 0.99);
    }

    #[test]
    fn bounds_of_fronto_parallel_unit_splat() {
        let cam = identity_camera(100.0, 64.0);
        let g = SplatGeometry::new(Vec3::new(0.0, 0.0, 1.0), Vec3::x(), Vec3::y(), 1.0, 1.0).unwrap();
        let r = screen_bounds(&g, &cam, 3.0).unwrap();
        let [hx, hy] = r.half_extent();
        assert!(hx >= 300.0 && hy >= 300.0);
        // the rectangle is clipped to the image
        assert_eq!((r.x0, r.x1, r.y0, r.y1), (0, 128, 0, 128));
    }

    #[test]
    fn edge_on_splat_keeps_low_pass_extent() {
        let cam = identity_camera(100.0, 64.0);
        // plane contains the viewing direction
        let g = SplatGeometry::new(Vec3::new(0.0, 0.0, 4.0), Vec3::z(), Vec3::y(), 0.1, 0.1).unwrap();
        let r = screen_bounds(&g, &cam, 3.0).unwrap();
        let [hx, hy] = r.half_extent();
        assert!(hx >= LOW_PASS_SIGMA && hy >= LOW_PASS_SIGMA);
        assert!(r.contains_pixel(63, 63) && r.contains_pixel(64, 64));
    }

    #[test]
    fn look_at_points_forward() {
        let cam = CameraModel::look_at(Vec3::new(0.0, -4.0, 0.0), Vec3::zeros(), Vec3::z(), 100.0, 64, 64).unwrap();
        let (x, y, z) = cam.project(&Vec3::zeros());
        assert_abs_diff_eq!(x, 32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 4.0, epsilon = 1e-12);
        // world up maps to image up (smaller y)
        let (_, y_up, _) = cam.project(&Vec3::new(0.0, 0.0, 0.5));
        assert!(y_up < 32.0);
        assert_abs_diff_eq!(cam.center(), Vec3::new(0.0, -4.0, 0.0), epsilon = 1e-12);
        let p = cam.unproject(10.5, 20.5, 3.0);
        let (x, y, z) = cam.project(&p);
        assert_abs_diff_eq!(x, 10.5, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 20.5, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn non_orthonormal_camera_rejected() {
        let mut m = Mat4::identity();
        m[(0, 0)] = 1.1;
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, 4, 4, m, 0.2, 10.0).is_err());
        let mut m = Mat4::identity();
        m[(2, 2)] = -1.0;
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, 4, 4, m, 0.2, 10.0).is_err());
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, 4, 4, Mat4::identity(), 1.0, 0.5).is_err());
    }

    #[test]
    fn quaternion_round_trip() {
        let q = [0.9, 0.1, -0.3, 0.2];
        let r = rotation_from_quaternion(q);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        let q2 = quaternion_from_rotation(&r);
        assert_abs_diff_eq!(rotation_from_quaternion(q2), r, epsilon = 1e-12);
    }
}
