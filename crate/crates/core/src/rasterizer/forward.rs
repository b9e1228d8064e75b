use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Vec3};
use crate::losses::{ndc_depth, DistortionAccumulators};
use crate::model::SplatModel;

use super::{bin_and_sort, DistortionKind, RenderSettings, TileGrid, MEAN_DEPTH_EPS, MIN_CONTRIBUTION, TRANSMITTANCE_EPS};

/// One blended contribution, in blend order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayEntry {
    pub splat: u32,
    /// Position of the splat in its tile list.
    pub slot: u32,
    /// Blend weight `ω = α Ĝ T`.
    pub weight: f64,
    pub depth: f64,
    pub g_hat: f64,
    /// Transmittance in front of this contribution.
    pub transmittance: f64,
    pub ray_branch: bool,
}

/// Per-pixel contribution lists recorded during the forward pass.
#[derive(Clone, Debug, Default)]
pub struct ReplayLists {
    spans: Vec<(u32, u32)>,
    entries: Vec<ReplayEntry>,
}

impl ReplayLists {
    pub fn pixel(&self, idx: usize) -> &[ReplayEntry] {
        let (start, len) = self.spans[idx];
        &self.entries[start as usize..(start + len) as usize]
    }

    pub fn pixel_count(&self) -> usize {
        self.spans.len()
    }

    pub fn total_entries(&self) -> usize {
        self.entries.len()
    }
}

/// All rendered channels of one view. Per-pixel buffers are row-major.
#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub width: usize,
    pub height: usize,
    /// Linear RGB, background composited.
    pub color: Vec<[f64; 3]>,
    /// Accumulated weight `A = Σ ω`.
    pub alpha: Vec<f64>,
    pub mean_depth: Vec<f64>,
    pub median_depth: Vec<f64>,
    /// Normalized `normal_sum`, zero where nothing contributed.
    pub normal: Vec<[f64; 3]>,
    /// `Σ ω n` with camera-facing world normals.
    pub normal_sum: Vec<[f64; 3]>,
    pub distortion: Vec<f64>,
    pub n_contrib: Vec<u32>,
    pub final_transmittance: Vec<f64>,
    pub replay: ReplayLists,
    /// Pixels whose blending stopped at the contributor cap.
    pub capped_pixels: usize,
    pub background: [f64; 3],
}

impl RenderOutput {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

#[derive(Default)]
struct PixelResult {
    color: [f64; 3],
    alpha: f64,
    depth_sum: f64,
    median: f64,
    normal_sum: Vec3,
    distortion: f64,
    n_contrib: u32,
    t_final: f64,
    capped: bool,
}

struct TileOut {
    pixels: Vec<(usize, PixelResult, u32, u32)>,
    entries: Vec<ReplayEntry>,
}

/// Blends one pixel of a tile front to back, appending its contributions
/// to `entries`.
fn blend_pixel(
    grid: &TileGrid,
    list: &[u32],
    px: usize,
    py: usize,
    cam: &CameraModel,
    settings: &RenderSettings,
    entries: &mut Vec<ReplayEntry>,
) -> PixelResult {
    let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
    let start = entries.len();
    let mut out = PixelResult::default();
    let mut t = 1.0;
    let mut acc = DistortionAccumulators::default();
    for (slot, &idx) in list.iter().enumerate() {
        let proj = grid.projections[idx as usize].as_ref().expect("binned splats are visible");
        if !proj.rect.contains_pixel(px, py) {
            continue;
        }
        let s = proj.sample(x, y, settings.low_pass_sigma);
        let a = proj.opacity * s.g_hat;
        if a < MIN_CONTRIBUTION {
            continue;
        }
        let w = a * t;
        for c in 0..3 {
            out.color[c] += w * proj.color[c];
        }
        out.alpha += w;
        out.depth_sum += w * s.z;
        out.normal_sum += proj.normal * w;
        if settings.distortion == DistortionKind::Squared {
            let m = ndc_depth(s.z, cam.near, cam.far);
            out.distortion += w * acc.term(m);
            acc.push(w, m);
        }
        if t > 0.5 {
            out.median = s.z;
        }
        entries.push(ReplayEntry {
            splat: idx,
            slot: slot as u32,
            weight: w,
            depth: s.z,
            g_hat: s.g_hat,
            transmittance: t,
            ray_branch: s.ray_branch,
        });
        t *= 1.0 - a;
        out.n_contrib += 1;
        if t < TRANSMITTANCE_EPS {
            break;
        }
        if out.n_contrib as usize >= settings.max_contributors {
            out.capped = true;
            break;
        }
    }
    if settings.distortion == DistortionKind::Absolute {
        let list = &entries[start..];
        for (i, ei) in list.iter().enumerate() {
            let mi = ndc_depth(ei.depth, cam.near, cam.far);
            for ej in &list[..i] {
                let mj = ndc_depth(ej.depth, cam.near, cam.far);
                out.distortion += ei.weight * ej.weight * (mi - mj).abs();
            }
        }
    }
    for c in 0..3 {
        out.color[c] += t * settings.background[c];
    }
    out.t_final = t;
    out
}

/// Renders every channel of one view from a binned grid.
pub fn render_forward(grid: &TileGrid, cam: &CameraModel, settings: &RenderSettings) -> RenderOutput {
    let tiles: Vec<TileOut> = (0..grid.tile_count())
        .into_par_iter()
        .map(|t| {
            let (x0, x1, y0, y1) = grid.tile_bounds(t);
            let list = &grid.tiles[t];
            let mut entries = Vec::new();
            let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
            for py in y0..y1 {
                for px in x0..x1 {
                    let start = entries.len() as u32;
                    let r = blend_pixel(grid, list, px, py, cam, settings, &mut entries);
                    let len = entries.len() as u32 - start;
                    pixels.push((py * grid.width + px, r, start, len));
                }
            }
            TileOut { pixels, entries }
        })
        .collect();

    let n = grid.width * grid.height;
    let mut out = RenderOutput {
        width: grid.width,
        height: grid.height,
        color: vec![[0.0; 3]; n],
        alpha: vec![0.0; n],
        mean_depth: vec![0.0; n],
        median_depth: vec![0.0; n],
        normal: vec![[0.0; 3]; n],
        normal_sum: vec![[0.0; 3]; n],
        distortion: vec![0.0; n],
        n_contrib: vec![0; n],
        final_transmittance: vec![1.0; n],
        replay: ReplayLists {
            spans: vec![(0, 0); n],
            entries: Vec::with_capacity(tiles.iter().map(|t| t.entries.len()).sum()),
        },
        capped_pixels: 0,
        background: settings.background,
    };
    for tile in tiles {
        let offset = out.replay.entries.len() as u32;
        for (i, r, start, len) in tile.pixels {
            out.color[i] = r.color;
            out.alpha[i] = r.alpha;
            out.mean_depth[i] = r.depth_sum / (r.alpha + MEAN_DEPTH_EPS);
            out.median_depth[i] = r.median;
            out.normal_sum[i] = [r.normal_sum.x, r.normal_sum.y, r.normal_sum.z];
            let len_n = r.normal_sum.norm();
            if len_n > 0.0 {
                let nn = r.normal_sum / len_n;
                out.normal[i] = [nn.x, nn.y, nn.z];
            }
            out.distortion[i] = r.distortion;
            out.n_contrib[i] = r.n_contrib;
            out.final_transmittance[i] = r.t_final;
            out.capped_pixels += r.capped as usize;
            out.replay.spans[i] = (offset + start, len);
        }
        out.replay.entries.extend(tile.entries);
    }
    out
}

/// Validates the model, bins it and renders one view.
pub fn render(model: &SplatModel, cam: &CameraModel, settings: &RenderSettings) -> Result<(TileGrid, RenderOutput)> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    model.validate()?;
    let grid = bin_and_sort(model, cam, settings);
    let out = render_forward(&grid, cam, settings);
    Ok((grid, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat4;
    use crate::model::logit;
    use crate::sh::{rgb_to_dc, MAX_SH_COEFFS};

    fn camera() -> CameraModel {
        CameraModel::new(50.0, 50.0, 7.5, 7.5, 16, 16, Mat4::identity(), 0.2, 1000.0).unwrap()
    }

    fn flat_sh(rgb: [f64; 3]) -> [[f64; 3]; MAX_SH_COEFFS] {
        let mut c = [[0.0; 3]; MAX_SH_COEFFS];
        c[0] = [rgb_to_dc(rgb[0]), rgb_to_dc(rgb[1]), rgb_to_dc(rgb[2])];
        c
    }

    fn center_pixel(out: &RenderOutput) -> usize {
        7 * out.width + 7
    }

    #[test]
    fn single_opaque_splat() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, 5.0), [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.5, flat_sh([0.2, 0.4, 0.6]));
        m.opacity_logits[0] = logit(1.0 - 1e-9);
        let (_, out) = render(&m, &camera(), &RenderSettings::default()).unwrap();
        let i = center_pixel(&out);
        assert!((out.alpha[i] - 1.0).abs() < 1e-6);
        for (c, want) in out.color[i].iter().zip([0.2, 0.4, 0.6]) {
            assert!((c - want).abs() < 1e-6);
        }
        assert!((out.mean_depth[i] - 5.0).abs() < 1e-5);
        assert_eq!(out.median_depth[i], out.replay.pixel(i)[0].depth);
        assert!((out.median_depth[i] - 5.0).abs() < 1e-3);
        assert_eq!(out.distortion[i], 0.0);
        assert_eq!(out.replay.pixel(i).len(), 1);
        // normal faces the camera
        assert!((out.normal[i][2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_pixels_show_background() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, 5.0), [1.0, 0.0, 0.0, 0.0], [0.01, 0.01], 0.9, flat_sh([1.0; 3]));
        let settings = RenderSettings { background: [0.1, 0.2, 0.3], ..Default::default() };
        let (_, out) = render(&m, &camera(), &settings).unwrap();
        assert_eq!(out.color[0], [0.1, 0.2, 0.3]);
        assert_eq!((out.alpha[0], out.mean_depth[0], out.median_depth[0]), (0.0, 0.0, 0.0));
        assert_eq!(out.normal[0], [0.0; 3]);
        assert!(out.replay.pixel(0).is_empty());
    }

    #[test]
    fn empty_model_is_an_error() {
        let m = SplatModel::new(0);
        assert!(matches!(render(&m, &camera(), &RenderSettings::default()), Err(Error::EmptyModel)));
    }

    #[test]
    fn low_alpha_median_is_last_contributor() {
        let mut m = SplatModel::new(0);
        m.push(Vec3::new(0.0, 0.0, 3.0), [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.2, flat_sh([1.0; 3]));
        m.push(Vec3::new(0.0, 0.0, 4.0), [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.2, flat_sh([1.0; 3]));
        let (_, out) = render(&m, &camera(), &RenderSettings::default()).unwrap();
        let i = center_pixel(&out);
        assert!(out.alpha[i] < 0.5);
        let list = out.replay.pixel(i);
        assert_eq!(out.median_depth[i], list.last().unwrap().depth);
    }

    #[test]
    fn contributor_cap_truncates() {
        let mut m = SplatModel::new(0);
        for k in 0..10 {
            m.push(Vec3::new(0.0, 0.0, 3.0 + k as f64 * 0.01), [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.05, flat_sh([1.0; 3]));
        }
        let settings = RenderSettings { max_contributors: 4, ..Default::default() };
        let (_, out) = render(&m, &camera(), &settings).unwrap();
        assert_eq!(out.replay.pixel(center_pixel(&out)).len(), 4);
        assert!(out.capped_pixels > 0);
    }
}
