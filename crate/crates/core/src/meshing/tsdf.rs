use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Vec3};

use super::DepthMap;

/// Observations per voxel after which new views stop gaining influence.
pub const MAX_WEIGHT: f64 = 64.0;

/// Truncated signed distance volume. Values are normalized by the
/// truncation distance and positive in front of the observed surface.
#[derive(Clone, Debug, PartialEq)]
pub struct TsdfVolume {
    /// World position of voxel `(0, 0, 0)`.
    pub origin: Vec3,
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub truncation: f64,
    /// Indexed `x + nx (y + ny z)`.
    pub tsdf: Vec<f64>,
    pub weight: Vec<f64>,
}

impl TsdfVolume {
    pub fn new(origin: Vec3, voxel_size: f64, dims: [usize; 3], truncation: f64) -> Result<Self> {
        if !(voxel_size > 0.0) || !(truncation > 0.0) || dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "invalid volume: voxel {voxel_size}, truncation {truncation}, dims {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(Self { origin, voxel_size, dims, truncation, tsdf: vec![1.0; n], weight: vec![0.0; n] })
    }

    /// Volume whose voxel centers cover `[min, max]`.
    pub fn from_bounds(min: Vec3, max: Vec3, voxel_size: f64, truncation: f64) -> Result<Self> {
        if !(voxel_size > 0.0) {
            return Err(Error::Config(format!("voxel size {voxel_size}")));
        }
        let ext = max - min;
        let dims = [0, 1, 2].map(|a| ((ext[a] / voxel_size).ceil() as usize + 1).max(2));
        Self::new(min, voxel_size, dims, truncation)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn voxel_center(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.origin + Vec3::new(x as f64, y as f64, z as f64) * self.voxel_size
    }

    /// Fuses one depth map. Voxels more than one truncation distance behind
    /// the observed depth are left untouched; everything in front, free
    /// space included, is averaged in.
    pub fn integrate(&mut self, depth: &DepthMap, cam: &CameraModel) -> Result<()> {
        if depth.width != cam.width || depth.height != cam.height {
            return Err(Error::DimensionMismatch("depth map and camera size".into()));
        }
        let [nx, ny, _] = self.dims;
        let slab = nx * ny;
        let (origin, vs, trunc) = (self.origin, self.voxel_size, self.truncation);
        let r = cam.rotation();
        let t = cam.translation();
        self.tsdf.par_chunks_mut(slab).zip(self.weight.par_chunks_mut(slab)).enumerate().for_each(
            |(z, (tsdf, weight))| {
                for y in 0..ny {
                    for x in 0..nx {
                        let p = origin + Vec3::new(x as f64, y as f64, z as f64) * vs;
                        let c = r * p + t;
                        if !(c.z > cam.near) {
                            continue;
                        }
                        let px = (cam.fx * c.x / c.z + cam.cx).floor();
                        let py = (cam.fy * c.y / c.z + cam.cy).floor();
                        if px < 0.0 || py < 0.0 || px >= cam.width as f64 || py >= cam.height as f64 {
                            continue;
                        }
                        let Some(d) = depth.get(px as usize, py as usize) else { continue };
                        let sdf = d - c.z;
                        if sdf < -trunc {
                            continue;
                        }
                        let v = (sdf / trunc).clamp(-1.0, 1.0);
                        let i = x + nx * y;
                        let w = weight[i];
                        tsdf[i] = (tsdf[i] * w + v) / (w + 1.0);
                        weight[i] = (w + 1.0).min(MAX_WEIGHT);
                    }
                }
            },
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat4;

    fn plane_view(d: f64) -> (DepthMap, CameraModel) {
        let cam = CameraModel::new(20.0, 20.0, 8.0, 8.0, 16, 16, Mat4::identity(), 0.2, 1000.0).unwrap();
        (DepthMap { width: 16, height: 16, depth: vec![d; 256] }, cam)
    }

    #[test]
    fn plane_gives_linear_ramp() {
        let (depth, cam) = plane_view(1.0);
        let mut v = TsdfVolume::new(Vec3::new(0.0, 0.0, 0.97), 0.01, [1, 1, 7], 0.02).unwrap();
        v.integrate(&depth, &cam).unwrap();
        let at = |z: usize| v.tsdf[v.index(0, 0, z)];
        // voxel depths 0.97, 0.98, ..., 1.03
        assert!((at(0) - 1.0).abs() < 1e-9);
        assert!((at(2) - 0.5).abs() < 1e-9);
        assert!(at(3).abs() < 1e-9);
        assert!((at(4) + 0.5).abs() < 1e-9);
        // beyond the truncation band: untouched
        assert_eq!(v.weight[v.index(0, 0, 6)], 0.0);
    }

    #[test]
    fn identical_views_are_idempotent() {
        let (depth, cam) = plane_view(1.0);
        let mut one = TsdfVolume::new(Vec3::new(-0.1, -0.1, 0.95), 0.01, [20, 20, 10], 0.02).unwrap();
        let mut two = one.clone();
        one.integrate(&depth, &cam).unwrap();
        two.integrate(&depth, &cam).unwrap();
        two.integrate(&depth, &cam).unwrap();
        for (a, b) in one.tsdf.iter().zip(&two.tsdf) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integration_order_does_not_matter() {
        let (d1, cam) = plane_view(1.0);
        let (d2, _) = plane_view(1.013);
        let (d3, _) = plane_view(0.994);
        let base = TsdfVolume::new(Vec3::new(-0.1, -0.1, 0.95), 0.01, [20, 20, 10], 0.02).unwrap();
        let mut a = base.clone();
        let mut b = base;
        for d in [&d1, &d2, &d3] {
            a.integrate(d, &cam).unwrap();
        }
        for d in [&d3, &d1, &d2] {
            b.integrate(d, &cam).unwrap();
        }
        for (x, y) in a.tsdf.iter().zip(&b.tsdf) {
            assert!((x - y).abs() < 1e-6);
        }
        assert_eq!(a.weight, b.weight);
    }

    #[test]
    fn tsdf_stays_normalized() {
        let (depth, cam) = plane_view(1.0);
        let mut v = TsdfVolume::new(Vec3::new(-0.2, -0.2, 0.5), 0.02, [20, 20, 40], 0.05).unwrap();
        for _ in 0..70 {
            v.integrate(&depth, &cam).unwrap();
        }
        assert!(v.tsdf.iter().all(|t| t.abs() <= 1.0));
        assert!(v.weight.iter().all(|&w| (0.0..=MAX_WEIGHT).contains(&w)));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(TsdfVolume::new(Vec3::zeros(), 0.0, [2, 2, 2], 0.1).is_err());
        assert!(TsdfVolume::new(Vec3::zeros(), 0.1, [0, 2, 2], 0.1).is_err());
    }
}
