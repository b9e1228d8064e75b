//! Tile-binned front-to-back renderer.
//!
//! Splats are projected once per view, sorted by center depth (ties by
//! index) and binned into square tiles. Each pixel then blends the splats of
//! its tile sequentially, so the result does not depend on how tiles are
//! scheduled across threads.

mod forward;
mod project;

pub use forward::{render, render_forward, ReplayEntry, ReplayLists, RenderOutput};
pub use project::{project_all, Sample, SplatProjection};

use crate::geometry::{CameraModel, DEFAULT_K_SIGMA, LOW_PASS_SIGMA};
use crate::model::SplatModel;

/// Blending stops once transmittance drops below this value.
pub const TRANSMITTANCE_EPS: f64 = 1e-4;
/// Contributions with `α Ĝ` below one display quantum are skipped.
pub const MIN_CONTRIBUTION: f64 = 1.0 / 255.0;
/// Stabilizer of the normalized mean depth.
pub const MEAN_DEPTH_EPS: f64 = 1e-6;

/// Pairwise penalty of the depth-distortion channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    /// `Σ_i Σ_{j<i} ω_i ω_j (m_i - m_j)²`, accumulated in a single pass.
    #[default]
    Squared,
    /// `Σ_i Σ_{j<i} ω_i ω_j |m_i - m_j|`, evaluated pairwise.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RenderSettings {
    pub background: [f64; 3],
    pub tile_size: usize,
    pub k_sigma: f64,
    pub low_pass_sigma: f64,
    /// Per-pixel cap on blended contributors; blending stops at the cap.
    pub max_contributors: usize,
    pub distortion: DistortionKind,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            background: [0.0; 3],
            tile_size: 16,
            k_sigma: DEFAULT_K_SIGMA,
            low_pass_sigma: LOW_PASS_SIGMA,
            max_contributors: 64,
            distortion: DistortionKind::Squared,
        }
    }
}

/// Per-tile splat lists for one view.
#[derive(Clone, Debug)]
pub struct TileGrid {
    pub tile_size: usize,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub width: usize,
    pub height: usize,
    /// Indexed by splat; `None` for culled splats.
    pub projections: Vec<Option<SplatProjection>>,
    /// Splat indices per tile (row-major tiles), ascending center depth.
    pub tiles: Vec<Vec<u32>>,
}

impl TileGrid {
    /// Pixel range `[x0, x1) × [y0, y1)` of tile `t`.
    pub fn tile_bounds(&self, t: usize) -> (usize, usize, usize, usize) {
        let tx = t % self.tiles_x;
        let ty = t / self.tiles_x;
        let x0 = tx * self.tile_size;
        let y0 = ty * self.tile_size;
        (x0, (x0 + self.tile_size).min(self.width), y0, (y0 + self.tile_size).min(self.height))
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }
}

/// Projects, culls, depth-sorts and bins the model into screen tiles.
pub fn bin_and_sort(model: &SplatModel, cam: &CameraModel, settings: &RenderSettings) -> TileGrid {
    let ts = settings.tile_size.max(1);
    let tiles_x = cam.width.div_ceil(ts);
    let tiles_y = cam.height.div_ceil(ts);
    let projections = project_all(model, cam, settings);

    let mut order: Vec<(f64, u32)> =
        projections.iter().flatten().map(|p| (p.depth, p.index as u32)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
    for &(_, idx) in &order {
        let rect = &projections[idx as usize].as_ref().expect("sorted splats are visible").rect;
        for ty in rect.y0 / ts..=(rect.y1 - 1) / ts {
            for tx in rect.x0 / ts..=(rect.x1 - 1) / ts {
                tiles[ty * tiles_x + tx].push(idx);
            }
        }
    }
    TileGrid { tile_size: ts, tiles_x, tiles_y, width: cam.width, height: cam.height, projections, tiles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Mat4, Vec3};
    use crate::sh::{rgb_to_dc, MAX_SH_COEFFS};

    fn camera() -> CameraModel {
        CameraModel::new(40.0, 40.0, 16.0, 16.0, 32, 32, Mat4::identity(), 0.2, 1000.0).unwrap()
    }

    fn flat_sh(rgb: [f64; 3]) -> [[f64; 3]; MAX_SH_COEFFS] {
        let mut c = [[0.0; 3]; MAX_SH_COEFFS];
        c[0] = [rgb_to_dc(rgb[0]), rgb_to_dc(rgb[1]), rgb_to_dc(rgb[2])];
        c
    }

    #[test]
    fn nearer_splat_comes_first() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, 2.0), [1.0, 0.0, 0.0, 0.0], [0.05, 0.05], 0.5, flat_sh([1.0, 0.0, 0.0]));
        m.push(Vec3::new(0.0, 0.0, 1.0), [1.0, 0.0, 0.0, 0.0], [0.05, 0.05], 0.5, flat_sh([0.0, 1.0, 0.0]));
        let grid = bin_and_sort(&m, &camera(), &RenderSettings::default());
        let shared: Vec<&Vec<u32>> = grid.tiles.iter().filter(|t| t.len() == 2).collect();
        assert!(!shared.is_empty());
        for t in shared {
            assert_eq!(t, &vec![1, 0]);
        }
    }

    #[test]
    fn splat_behind_camera_is_absent() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, -2.0), [1.0, 0.0, 0.0, 0.0], [0.5, 0.5], 0.5, flat_sh([1.0; 3]));
        let grid = bin_and_sort(&m, &camera(), &RenderSettings::default());
        assert!(grid.projections[0].is_none());
        assert!(grid.tiles.iter().all(|t| t.is_empty()));
    }

    #[test]
    fn equal_depths_break_ties_by_index() {
        let mut m = SplatModel::new(0);
        for _ in 0..3 {
            m.push(Vec3::new(0.0, 0.0, 2.0), [1.0, 0.0, 0.0, 0.0], [0.05, 0.05], 0.5, flat_sh([1.0; 3]));
        }
        let grid = bin_and_sort(&m, &camera(), &RenderSettings::default());
        for t in grid.tiles.iter().filter(|t| !t.is_empty()) {
            assert_eq!(t, &vec![0, 1, 2]);
        }
    }
}
