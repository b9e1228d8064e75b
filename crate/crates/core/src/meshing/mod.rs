//! Mesh extraction: depth rendering, TSDF fusion, marching cubes, and
//! Chamfer evaluation.

mod chamfer;
mod marching;
mod tables;
mod tsdf;

pub use chamfer::{chamfer_distance, mesh_chamfer, nearest_distances, PointGrid};
pub use marching::extract_mesh;
pub use tsdf::TsdfVolume;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Vec3};
use crate::model::SplatModel;
use crate::rasterizer::{render, RenderSettings};

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub normals: Option<Vec<[f64; 3]>>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertex(&self, i: u32) -> Vec3 {
        Vec3::from(self.vertices[i as usize])
    }

    /// Twice the signed area vector of triangle `t`.
    pub fn triangle_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertex(a), self.vertex(b), self.vertex(c));
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Checks index ranges and optional attribute lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if self.triangles.iter().flatten().any(|&i| i >= n) {
            return Err(Error::InvalidGeometry("triangle index out of range".into()));
        }
        if self.normals.as_ref().is_some_and(|v| v.len() != self.vertices.len())
            || self.colors.as_ref().is_some_and(|v| v.len() != self.vertices.len())
        {
            return Err(Error::DimensionMismatch("vertex attributes".into()));
        }
        Ok(())
    }

    /// `n` points distributed uniformly over the surface area.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Result<Vec<Vec3>> {
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::EmptyInput("mesh has no surface area".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let r = rng.gen::<f64>() * total;
            let t = cumulative.partition_point(|&c| c <= r).min(self.triangles.len() - 1);
            let [a, b, c] = self.triangles[t];
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let s = r1.sqrt();
            let p = self.vertex(a) * (1.0 - s) + self.vertex(b) * (s * (1.0 - r2)) + self.vertex(c) * (s * r2);
            out.push(p);
        }
        Ok(out)
    }
}

/// Which depth statistic feeds fusion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthMode {
    #[default]
    Median,
    Expected,
}

impl std::str::FromStr for DepthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Self::Median),
            "expected" | "mean" => Ok(Self::Expected),
            _ => Err(Error::Config(format!("unknown depth mode {s:?}"))),
        }
    }
}

/// Per-pixel camera depth; `0` marks invalid pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthMap {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.depth[y * self.width + x];
        (d > 0.0).then_some(d)
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Accumulated weight below which a pixel's depth is not trusted.
pub const MIN_DEPTH_ALPHA: f64 = 0.5;

/// Renders one depth map per camera.
pub fn render_fusion_depths(
    model: &SplatModel,
    cameras: &[CameraModel],
    mode: DepthMode,
    settings: &RenderSettings,
) -> Result<Vec<DepthMap>> {
    cameras
        .iter()
        .map(|cam| {
            let (_, out) = render(model, cam, settings)?;
            let src = match mode {
                DepthMode::Median => &out.median_depth,
                DepthMode::Expected => &out.mean_depth,
            };
            let depth = src
                .iter()
                .zip(&out.alpha)
                .map(|(&d, &a)| if a >= MIN_DEPTH_ALPHA && d > 0.0 && d.is_finite() { d } else { 0.0 })
                .collect();
            Ok(DepthMap { width: out.width, height: out.height, depth })
        })
        .collect()
}

/// Fusion parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub voxel_size: f64,
    pub truncation: f64,
    pub depth_mode: DepthMode,
}

impl FusionConfig {
    /// Voxel size `0.004` and truncation `0.02` for a unit-extent scene,
    /// scaled to `extent`.
    pub fn for_extent(extent: f64) -> Self {
        let voxel_size = extent * 0.004;
        Self { voxel_size, truncation: 5.0 * voxel_size, depth_mode: DepthMode::Median }
    }
}

/// Renders depth maps for every camera, fuses them into a TSDF volume over
/// `[min, max]` and extracts the zero level set.
pub fn extract_from_model(
    model: &SplatModel,
    cameras: &[CameraModel],
    bounds: (Vec3, Vec3),
    fusion: &FusionConfig,
    settings: &RenderSettings,
) -> Result<TriangleMesh> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    let depths = render_fusion_depths(model, cameras, fusion.depth_mode, settings)?;
    let mut volume = TsdfVolume::from_bounds(bounds.0, bounds.1, fusion.voxel_size, fusion.truncation)?;
    for (d, cam) in depths.iter().zip(cameras) {
        volume.integrate(d, cam)?;
    }
    Ok(extract_mesh(&volume))
}

/// Fraction of opaque splat centers ignored at each end of every axis when
/// sizing the fusion volume, so isolated floaters do not inflate it.
pub const BOUNDS_TRIM: f64 = 0.005;

/// Fusion volume for a trained model: the per-axis range of the centers of
/// splats with opacity at least `min_opacity`, trimmed by [`BOUNDS_TRIM`],
/// padded by a tenth of its largest side and clipped to the cube of
/// half-size `extent` around the camera centroid.
pub fn model_bounds(model: &SplatModel, cameras: &[CameraModel], extent: f64, min_opacity: f64) -> Result<(Vec3, Vec3)> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    if cameras.is_empty() {
        return Err(Error::EmptyInput("no cameras".into()));
    }
    let centers: Vec<Vec3> = (0..model.len()).filter(|&i| model.opacity(i) >= min_opacity).map(|i| model.center(i)).collect();
    if centers.is_empty() {
        return Err(Error::EmptyInput("no opaque splats".into()));
    }
    let cut = (BOUNDS_TRIM * centers.len() as f64).floor() as usize;
    let (mut lo, mut hi) = (Vec3::zeros(), Vec3::zeros());
    for k in 0..3 {
        let mut xs: Vec<f64> = centers.iter().map(|c| c[k]).collect();
        xs.sort_by(f64::total_cmp);
        lo[k] = xs[cut];
        hi[k] = xs[xs.len() - 1 - cut];
    }
    let pad = Vec3::repeat(0.1 * (hi - lo).max().max(1e-3 * extent));
    let centroid = cameras.iter().map(|c| c.center()).sum::<Vec3>() / cameras.len() as f64;
    let clip = Vec3::repeat(extent);
    let lo = (lo - pad).sup(&(centroid - clip));
    let hi = (hi + pad).inf(&(centroid + clip));
    if !(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z) {
        return Err(Error::EmptyInput("no opaque splats inside the camera volume".into()));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat4;
    use crate::model::logit;
    use crate::sh::{rgb_to_dc, MAX_SH_COEFFS};

    fn quad() -> TriangleMesh {
        TriangleMesh {
            vertices: vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            normals: None,
            colors: None,
        }
    }

    #[test]
    fn area_and_validation() {
        let m = quad();
        assert!((m.area() - 2.0).abs() < 1e-15);
        m.validate().unwrap();
        let mut bad = m.clone();
        bad.triangles.push([0, 1, 7]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn surface_samples_lie_on_the_mesh_and_are_seeded() {
        let m = quad();
        let a = m.sample_surface(500, 3).unwrap();
        assert_eq!(a, m.sample_surface(500, 3).unwrap());
        assert!(a.iter().all(|p| p.z == 0.0 && (0.0..=2.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
        let left = a.iter().filter(|p| p.x < 1.0).count() as f64 / 500.0;
        assert!((left - 0.5).abs() < 0.08);
    }

    #[test]
    fn opaque_fronto_parallel_disk_has_constant_depth() {
        let mut m = SplatModel::new(0);
        let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
        sh[0] = [rgb_to_dc(0.5); 3];
        m.push(Vec3::new(0.0, 0.0, 2.0), [1.0, 0.0, 0.0, 0.0], [0.5, 0.5], 0.5, sh);
        m.opacity_logits[0] = logit(0.999);
        let cam = CameraModel::new(20.0, 20.0, 16.0, 16.0, 32, 32, Mat4::identity(), 0.2, 1000.0).unwrap();
        for mode in [DepthMode::Median, DepthMode::Expected] {
            let d = &render_fusion_depths(&m, &[cam.clone()], mode, &RenderSettings::default()).unwrap()[0];
            assert!(d.valid_count() > 20);
            for v in d.depth.iter().filter(|&&v| v > 0.0) {
                assert!((v - 2.0).abs() < 1e-5, "{v}");
            }
        }
    }

    #[test]
    fn empty_view_is_all_invalid() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, -2.0), [1.0, 0.0, 0.0, 0.0], [0.5, 0.5], 0.9, [[0.0; 3]; MAX_SH_COEFFS]);
        let cam = CameraModel::new(20.0, 20.0, 16.0, 16.0, 32, 32, Mat4::identity(), 0.2, 1000.0).unwrap();
        let d = &render_fusion_depths(&m, &[cam], DepthMode::Median, &RenderSettings::default()).unwrap()[0];
        assert_eq!(d.valid_count(), 0);
    }

    #[test]
    fn bounds_cover_opaque_splats_and_ignore_floaters() {
        let mut m = SplatModel::new(0);
        let sh = [[0.0; 3]; MAX_SH_COEFFS];
        for i in 0..400 {
            let t = i as f64 / 399.0;
            m.push(Vec3::new(2.0 * t - 1.0, 0.5 * t, 0.0), [1.0, 0.0, 0.0, 0.0], [0.01, 0.01], 0.9, sh);
        }
        // transparent and isolated opaque floaters
        m.push(Vec3::new(0.0, 0.0, 9.0), [1.0, 0.0, 0.0, 0.0], [0.1, 0.05], 0.01, sh);
        m.push(Vec3::new(0.0, 0.0, -50.0), [1.0, 0.0, 0.0, 0.0], [0.1, 0.05], 0.9, sh);
        let cams = [
            CameraModel::look_at(Vec3::new(0.0, -2.0, 0.0), Vec3::zeros(), Vec3::z(), 10.0, 8, 8).unwrap(),
            CameraModel::look_at(Vec3::new(0.0, 2.0, 0.0), Vec3::zeros(), Vec3::z(), 10.0, 8, 8).unwrap(),
        ];
        let (lo, hi) = model_bounds(&m, &cams, 3.0, 0.05).unwrap();
        // 401 opaque centers, two trimmed at each end of every axis
        let step = 2.0 / 399.0;
        let pad = 0.1 * (2.0 - 4.0 * step);
        let expect_lo = Vec3::new(-1.0 + 2.0 * step - pad, 0.5 / 399.0 - pad, -pad);
        let expect_hi = Vec3::new(1.0 - 2.0 * step + pad, 0.5 * 397.0 / 399.0 + pad, pad);
        assert!((lo - expect_lo).norm() < 1e-12, "{lo}");
        assert!((hi - expect_hi).norm() < 1e-12, "{hi}");
        assert!(matches!(model_bounds(&SplatModel::new(0), &cams, 2.0, 0.05), Err(Error::EmptyModel)));
    }

    #[test]
    fn depth_mode_parses() {
        assert_eq!("median".parse::<DepthMode>().unwrap(), DepthMode::Median);
        assert_eq!("expected".parse::<DepthMode>().unwrap(), DepthMode::Expected);
        assert!("mode".parse::<DepthMode>().is_err());
    }
}
