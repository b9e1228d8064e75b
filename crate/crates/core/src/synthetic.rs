//! Procedural test scenes rendered by a small analytic ray tracer.
//!
//! Objects sit at the origin with `+z` up. Cameras look at the origin from
//! rings at -30°, 0° and +30° latitude. Colors come from a smooth sinusoidal
//! albedo, unlit, so appearance is view independent.

use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Vec3};
use crate::imgbuf::RgbImage;
use crate::io::{save_dataset, write_mesh, write_pfm, SceneDataset};
use crate::meshing::TriangleMesh;

pub const SPHERE_RADIUS: f64 = 1.0;
pub const CUBE_HALF: f64 = 0.7;
/// The two planes sit at `x = ±PLANE_OFFSET` and span `|y|, |z| ≤ PLANE_HALF`.
pub const PLANE_OFFSET: f64 = 0.35;
pub const PLANE_HALF: f64 = 0.7;
pub const CAMERA_DISTANCE: f64 = 3.5;
/// Focal length in units of image width.
pub const FOCAL_FACTOR: f64 = 1.2;
pub const RING_LATITUDES_DEG: [f64; 3] = [-30.0, 0.0, 30.0];
/// Every `HOLDOUT_STRIDE`-th view, starting at 0, is held out.
pub const HOLDOUT_STRIDE: usize = 8;
pub const INIT_POINTS: usize = 1000;
/// Normal jitter of the initialization points relative to object size.
pub const INIT_NOISE: f64 = 0.01;
/// Supersampling per axis for the color images.
pub const SUPERSAMPLE: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    Sphere,
    Cube,
    TwoPlanes,
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "cube" => Ok(Self::Cube),
            "two-planes" => Ok(Self::TwoPlanes),
            _ => Err(Error::Config(format!("unknown scene kind {s:?} (sphere, cube, two-planes)"))),
        }
    }
}

impl std::fmt::Display for SceneKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sphere => "sphere",
            Self::Cube => "cube",
            Self::TwoPlanes => "two-planes",
        })
    }
}

/// Smooth albedo `0.5 + 0.3 sin(k_c · p + φ_c)` per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    pub waves: [Vec3; 3],
    pub phases: [f64; 3],
}

impl Texture {
    pub const FREQUENCY: f64 = 12.0;

    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_u64);
        let waves = [0; 3].map(|_| random_unit(&mut rng) * Self::FREQUENCY);
        let phases = [0; 3].map(|_| rng.gen_range(0.0..TAU));
        Self { waves, phases }
    }

    pub fn albedo(&self, p: &Vec3) -> [f64; 3] {
        [0, 1, 2].map(|c| 0.5 + 0.3 * (self.waves[c].dot(p) + self.phases[c]).sin())
    }
}

/// Nearest hit of a ray: distance along the unit direction and surface normal.
pub fn trace(kind: SceneKind, origin: &Vec3, dir: &Vec3) -> Option<(f64, Vec3)> {
    match kind {
        SceneKind::Sphere => {
            let b = origin.dot(dir);
            let c = origin.norm_squared() - SPHERE_RADIUS * SPHERE_RADIUS;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let s = disc.sqrt();
            let t = if -b - s > 0.0 { -b - s } else { -b + s };
            (t > 0.0).then(|| (t, (origin + dir * t) / SPHERE_RADIUS))
        }
        SceneKind::Cube => {
            let (mut t0, mut t1, mut axis) = (f64::NEG_INFINITY, f64::INFINITY, 0);
            for a in 0..3 {
                if dir[a] == 0.0 {
                    if origin[a].abs() > CUBE_HALF {
                        return None;
                    }
                    continue;
                }
                let (ta, tb) = ((-CUBE_HALF - origin[a]) / dir[a], (CUBE_HALF - origin[a]) / dir[a]);
                let (lo, hi) = (ta.min(tb), ta.max(tb));
                if lo > t0 {
                    t0 = lo;
                    axis = a;
                }
                t1 = t1.min(hi);
            }
            if t0 > t1 || t0 <= 0.0 {
                return None;
            }
            let mut n = Vec3::zeros();
            n[axis] = -dir[axis].signum();
            Some((t0, n))
        }
        SceneKind::TwoPlanes => {
            if dir.x == 0.0 {
                return None;
            }
            [-PLANE_OFFSET, PLANE_OFFSET]
                .iter()
                .filter_map(|&x| {
                    let t = (x - origin.x) / dir.x;
                    let p = origin + dir * t;
                    (t > 0.0 && p.y.abs() <= PLANE_HALF && p.z.abs() <= PLANE_HALF).then_some(t)
                })
                .min_by(f64::total_cmp)
                .map(|t| (t, Vec3::new(-dir.x.signum(), 0.0, 0.0)))
        }
    }
}

/// Ray-traced view: supersampled color, center-sample camera depth (0 where
/// the ray misses) and fractional coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct TracedView {
    pub color: RgbImage,
    pub depth: Vec<f64>,
    pub coverage: Vec<f64>,
}

/// Camera-space depth of the surface seen through pixel coordinates `(x, y)`.
pub fn trace_depth(kind: SceneKind, cam: &CameraModel, x: f64, y: f64) -> Option<f64> {
    let (o, d) = cam.ray(x, y);
    trace(kind, &o, &d).map(|(t, _)| cam.to_camera(&(o + d * t)).z)
}

pub fn trace_view(kind: SceneKind, texture: &Texture, cam: &CameraModel, background: [f64; 3]) -> TracedView {
    let (w, h) = (cam.width, cam.height);
    let ss = SUPERSAMPLE;
    let inv = 1.0 / (ss * ss) as f64;
    let rows: Vec<(Vec<[f64; 3]>, Vec<f64>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut color = Vec::with_capacity(w);
            let mut depth = Vec::with_capacity(w);
            let mut coverage = Vec::with_capacity(w);
            for x in 0..w {
                let mut c = [0.0; 3];
                let mut hits = 0usize;
                for sy in 0..ss {
                    for sx in 0..ss {
                        let px = x as f64 + (sx as f64 + 0.5) / ss as f64;
                        let py = y as f64 + (sy as f64 + 0.5) / ss as f64;
                        let (o, d) = cam.ray(px, py);
                        let rgb = match trace(kind, &o, &d) {
                            Some((t, _)) => {
                                hits += 1;
                                texture.albedo(&(o + d * t))
                            }
                            None => background,
                        };
                        (0..3).for_each(|k| c[k] += rgb[k] * inv);
                    }
                }
                color.push(c);
                depth.push(trace_depth(kind, cam, x as f64 + 0.5, y as f64 + 0.5).unwrap_or(0.0));
                coverage.push(hits as f64 * inv);
            }
            (color, depth, coverage)
        })
        .collect();
    let mut out = TracedView { color: RgbImage::new(w, h), depth: Vec::new(), coverage: Vec::new() };
    out.color.data.clear();
    for (c, d, v) in rows {
        out.color.data.extend(c);
        out.depth.extend(d);
        out.coverage.extend(v);
    }
    out.color.quantize_srgb8();
    out
}

/// Ring cameras around the origin. View `k` sits on latitude ring `k mod 3`
/// at azimuth `2πk / n`.
pub fn ring_cameras(n_views: usize, resolution: usize) -> Result<Vec<CameraModel>> {
    if n_views < 2 {
        return Err(Error::Config(format!("need at least 2 views, got {n_views}")));
    }
    if resolution == 0 {
        return Err(Error::Config("resolution must be positive".into()));
    }
    let rings = RING_LATITUDES_DEG.len().min(n_views);
    (0..n_views)
        .map(|k| {
            let lat = RING_LATITUDES_DEG[if rings == RING_LATITUDES_DEG.len() { k % rings } else { 1 }].to_radians();
            let az = TAU * k as f64 / n_views as f64;
            let eye = Vec3::new(lat.cos() * az.cos(), lat.cos() * az.sin(), lat.sin()) * CAMERA_DISTANCE;
            CameraModel::look_at(
                eye,
                Vec3::zeros(),
                Vec3::z(),
                FOCAL_FACTOR * resolution as f64,
                resolution,
                resolution,
            )
        })
        .collect()
}

/// Generated scene with its analytic ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub kind: SceneKind,
    pub seed: u64,
    pub texture: Texture,
    pub dataset: SceneDataset,
    pub mesh: TriangleMesh,
    /// Per-view camera depth, 0 where the ray misses.
    pub depths: Vec<Vec<f64>>,
}

impl SyntheticScene {
    /// Size of the object, used for Chamfer thresholds.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            SceneKind::Sphere => 2.0 * SPHERE_RADIUS,
            SceneKind::Cube => 2.0 * CUBE_HALF * 3f64.sqrt(),
            SceneKind::TwoPlanes => {
                (4.0 * PLANE_OFFSET * PLANE_OFFSET + 8.0 * PLANE_HALF * PLANE_HALF).sqrt()
            }
        }
    }

    /// Axis-aligned box around the object with a margin.
    pub fn bounds(&self, margin: f64) -> (Vec3, Vec3) {
        let h = match self.kind {
            SceneKind::Sphere => Vec3::repeat(SPHERE_RADIUS),
            SceneKind::Cube => Vec3::repeat(CUBE_HALF),
            SceneKind::TwoPlanes => Vec3::new(PLANE_OFFSET, PLANE_HALF, PLANE_HALF),
        };
        (-h - Vec3::repeat(margin), h + Vec3::repeat(margin))
    }

    /// Writes the dataset plus `mesh.ply` and `depth/*.pfm`.
    pub fn save(&self, root: &Path) -> Result<()> {
        let mut manifest = save_dataset(root, &self.dataset)?;
        write_mesh(&root.join("mesh.ply"), &self.mesh)?;
        manifest.mesh = Some("mesh.ply".into());
        std::fs::create_dir_all(root.join("depth"))?;
        for (frame, depth) in manifest.frames.iter_mut().zip(&self.depths) {
            let rel = format!("depth/{}.pfm", frame.name);
            write_pfm(&root.join(&rel), frame.width, frame.height, depth)?;
            frame.depth = Some(rel);
        }
        crate::io::write_manifest(root, &manifest)
    }
}

pub fn generate_synthetic_scene(kind: SceneKind, n_views: usize, resolution: usize, seed: u64) -> Result<SyntheticScene> {
    let cameras = ring_cameras(n_views, resolution)?;
    let texture = Texture::from_seed(seed);
    let background = [0.0; 3];
    let views: Vec<TracedView> = cameras.iter().map(|c| trace_view(kind, &texture, c, background)).collect();
    let (images, depths) = views.into_iter().map(|v| (v.color, v.depth)).unzip();
    let test: Vec<usize> = (0..n_views).step_by(HOLDOUT_STRIDE).collect();
    let train: Vec<usize> = (0..n_views).filter(|i| i % HOLDOUT_STRIDE != 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_init_points(kind, INIT_POINTS, &mut rng);
    let colors = points.iter().map(|p| texture.albedo(p)).collect();
    let dataset = SceneDataset {
        names: (0..n_views).map(|i| format!("{i:03}")).collect(),
        scene_extent: crate::io::scene_extent(&train.iter().map(|&i| cameras[i].clone()).collect::<Vec<_>>()),
        cameras,
        images,
        init_points: points,
        init_colors: Some(colors),
        train,
        test,
        background,
        mesh_path: None,
        depth_paths: vec![None; n_views],
    };
    dataset.validate()?;
    Ok(SyntheticScene { kind, seed, texture, dataset, mesh: ground_truth_mesh(kind), depths })
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Surface samples pushed along the normal by `INIT_NOISE` times the object
/// size times a standard normal-ish offset.
fn sample_init_points(kind: SceneKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            let (p, normal, size) = match kind {
                SceneKind::Sphere => {
                    let d = random_unit(rng);
                    (d * SPHERE_RADIUS, d, SPHERE_RADIUS)
                }
                SceneKind::Cube => {
                    let axis = rng.gen_range(0..3);
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let mut p = Vec3::new(
                        rng.gen_range(-CUBE_HALF..CUBE_HALF),
                        rng.gen_range(-CUBE_HALF..CUBE_HALF),
                        rng.gen_range(-CUBE_HALF..CUBE_HALF),
                    );
                    p[axis] = sign * CUBE_HALF;
                    let mut n = Vec3::zeros();
                    n[axis] = sign;
                    (p, n, CUBE_HALF)
                }
                SceneKind::TwoPlanes => {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let p = Vec3::new(
                        sign * PLANE_OFFSET,
                        rng.gen_range(-PLANE_HALF..PLANE_HALF),
                        rng.gen_range(-PLANE_HALF..PLANE_HALF),
                    );
                    (p, Vec3::x() * sign, PLANE_HALF)
                }
            };
            let jitter: f64 = (0..3).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>();
            p + normal * (INIT_NOISE * size * jitter)
        })
        .collect()
}

/// Triangulated analytic surface: an icosphere, a subdivided cube, or two
/// subdivided squares.
pub fn ground_truth_mesh(kind: SceneKind) -> TriangleMesh {
    let mut mesh = match kind {
        SceneKind::Sphere => icosphere(5, SPHERE_RADIUS),
        SceneKind::Cube => {
            let mut m = empty_mesh();
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    add_quad(&mut m, axis, sign * CUBE_HALF, CUBE_HALF, 32, sign);
                }
            }
            m
        }
        SceneKind::TwoPlanes => {
            let mut m = empty_mesh();
            for sign in [-1.0, 1.0] {
                add_quad(&mut m, 0, sign * PLANE_OFFSET, PLANE_HALF, 32, -sign);
            }
            m
        }
    };
    mesh.normals = None;
    mesh
}

fn empty_mesh() -> TriangleMesh {
    TriangleMesh { vertices: Vec::new(), triangles: Vec::new(), normals: None, colors: None }
}

/// Square `|a|, |b| ≤ half` in the plane `p[axis] = offset`, facing `facing`
/// along the axis.
fn add_quad(m: &mut TriangleMesh, axis: usize, offset: f64, half: f64, n: usize, facing: f64) {
    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
    let base = m.vertices.len() as u32;
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [0.0; 3];
            p[axis] = offset;
            p[a] = -half + 2.0 * half * i as f64 / n as f64;
            p[b] = -half + 2.0 * half * j as f64 / n as f64;
            m.vertices.push(p);
        }
    }
    let idx = |i: usize, j: usize| base + (j * (n + 1) + i) as u32;
    for j in 0..n {
        for i in 0..n {
            // (a, b, axis) is right-handed, so counter-clockwise in (a, b) faces +axis
            let (t0, t1) = if facing > 0.0 {
                ([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)], [idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)])
            } else {
                ([idx(i, j), idx(i + 1, j + 1), idx(i + 1, j)], [idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)])
            };
            m.triangles.push(t0);
            m.triangles.push(t1);
        }
    }
}

fn icosphere(levels: usize, radius: f64) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) / 2.0).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    TriangleMesh {
        vertices: verts.iter().map(|v| [v.x * radius, v.y * radius, v.z * radius]).collect(),
        triangles: tris,
        normals: None,
        colors: None,
    }
}

/// Area of the convex hull of 2D points (monotone chain).
pub fn convex_hull_area(points: &[[f64; 2]]) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n).map(|i| hull[i][0] * hull[(i + 1) % n][1] - hull[(i + 1) % n][0] * hull[i][1]).sum::<f64>().abs() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_center_depth_is_distance_minus_radius() {
        let s = generate_synthetic_scene(SceneKind::Sphere, 8, 32, 1).unwrap();
        for cam in &s.dataset.cameras {
            let z = trace_depth(SceneKind::Sphere, cam, cam.cx, cam.cy).unwrap();
            assert!((z - (CAMERA_DISTANCE - SPHERE_RADIUS)).abs() < 1e-12, "{z}");
        }
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic_scene(SceneKind::Cube, 4, 24, 9).unwrap().save(a.path()).unwrap();
        generate_synthetic_scene(SceneKind::Cube, 4, 24, 9).unwrap().save(b.path()).unwrap();
        for rel in ["cameras.json", "points.ply", "mesh.ply", "images/001.png", "depth/003.pfm"] {
            assert_eq!(std::fs::read(a.path().join(rel)).unwrap(), std::fs::read(b.path().join(rel)).unwrap(), "{rel}");
        }
    }

    #[test]
    fn cube_silhouette_matches_projected_hull() {
        let cams = ring_cameras(6, 256).unwrap();
        let tex = Texture::from_seed(0);
        for cam in &cams {
            let view = trace_view(SceneKind::Cube, &tex, cam, [0.0; 3]);
            let area: f64 = view.coverage.iter().sum();
            let corners: Vec<[f64; 2]> = (0..8)
                .map(|k| {
                    let p = Vec3::new(
                        if k & 1 == 0 { -CUBE_HALF } else { CUBE_HALF },
                        if k & 2 == 0 { -CUBE_HALF } else { CUBE_HALF },
                        if k & 4 == 0 { -CUBE_HALF } else { CUBE_HALF },
                    );
                    let (x, y, _) = cam.project(&p);
                    [x, y]
                })
                .collect();
            let hull = convex_hull_area(&corners);
            assert!((area - hull).abs() / hull <= 0.01, "{area} vs {hull}");
        }
    }

    #[test]
    fn rerendering_reproduces_stored_images() {
        let s = generate_synthetic_scene(SceneKind::TwoPlanes, 3, 20, 4).unwrap();
        for (cam, img) in s.dataset.cameras.iter().zip(&s.dataset.images) {
            assert_eq!(&trace_view(s.kind, &s.texture, cam, s.dataset.background).color, img);
        }
    }

    #[test]
    fn saved_scene_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_synthetic_scene(SceneKind::Sphere, 9, 16, 2).unwrap();
        s.save(dir.path()).unwrap();
        let ds = crate::io::load_dataset(dir.path()).unwrap();
        assert_eq!(ds.images, s.dataset.images);
        assert_eq!(ds.test, vec![0, 8]);
        assert_eq!(ds.mesh_path, Some(dir.path().join("mesh.ply")));
        let (w, h, d) = crate::io::read_pfm(&dir.path().join("depth/004.pfm")).unwrap();
        assert_eq!((w, h), (16, 16));
        for (a, b) in d.iter().zip(&s.depths[4]) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
        let mesh = crate::io::read_mesh(&dir.path().join("mesh.ply")).unwrap();
        assert_eq!(mesh.triangles, s.mesh.triangles);
    }

    #[test]
    fn ground_truth_meshes_are_outward_and_sized() {
        let sphere = ground_truth_mesh(SceneKind::Sphere);
        assert!((sphere.area() - 4.0 * PI).abs() / (4.0 * PI) < 2e-3);
        let cube = ground_truth_mesh(SceneKind::Cube);
        assert!((cube.area() - 24.0 * CUBE_HALF * CUBE_HALF).abs() < 1e-9);
        for m in [&sphere, &cube] {
            for t in 0..m.triangles.len() {
                let c = m.vertex(m.triangles[t][0]);
                assert!(m.triangle_cross(t).dot(&c) > 0.0);
            }
        }
    }

    #[test]
    fn init_points_lie_near_the_surface() {
        let s = generate_synthetic_scene(SceneKind::Sphere, 2, 8, 3).unwrap();
        assert_eq!(s.dataset.init_points.len(), INIT_POINTS);
        for p in &s.dataset.init_points {
            assert!((p.norm() - 1.0).abs() <= 3.0 * INIT_NOISE + 1e-12);
        }
    }

    #[test]
    fn hull_area_of_unit_square() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        assert!((convex_hull_area(&pts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_views_is_an_error() {
        assert!(generate_synthetic_scene(SceneKind::Sphere, 1, 8, 0).is_err());
        assert!("torus".parse::<SceneKind>().is_err());
    }
}
