//! Dataset directory layout.
//!
//! ```text
//! root/
//!   cameras.json      manifest, see [`DatasetManifest`]
//!   images/*.png      8-bit sRGB
//!   points.ply        initialization points, optional colors
//!   mesh.ply          optional ground-truth surface
//!   depth/*.pfm       optional ground-truth depth
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Mat4, Vec3};
use crate::imgbuf::{linear_to_srgb8, srgb8_to_linear, RgbImage};

use super::{read_png, read_ply, write_png, write_points};

pub const CAMERAS_FILE: &str = "cameras.json";
const MANIFEST_VERSION: u32 = 1;

/// One view in `cameras.json`. Paths are relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub name: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    /// `"train"` or `"test"`.
    pub split: String,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
    /// Row-major 4×4 world-to-camera transform (x right, y down, z forward).
    pub world_to_camera: [f64; 16],
}

impl CameraRecord {
    pub fn camera(&self) -> Result<CameraModel> {
        let m = Mat4::from_row_slice(&self.world_to_camera);
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height, m, self.near, self.far)
            .map_err(|e| Error::Dataset(format!("view {:?}: {e}", self.name)))
    }

    pub fn from_camera(name: &str, image: &str, split: &str, cam: &CameraModel) -> Self {
        let mut w = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                w[r * 4 + c] = cam.world_to_camera[(r, c)];
            }
        }
        Self {
            name: name.into(),
            image: image.into(),
            depth: None,
            split: split.into(),
            width: cam.width,
            height: cam.height,
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            near: cam.near,
            far: cam.far,
            world_to_camera: w,
        }
    }
}

/// Contents of `cameras.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default)]
    pub background: [f64; 3],
    pub points: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    pub frames: Vec<CameraRecord>,
}

/// Posed images plus initialization points.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneDataset {
    pub names: Vec<String>,
    pub cameras: Vec<CameraModel>,
    /// Linear RGB.
    pub images: Vec<RgbImage>,
    pub init_points: Vec<Vec3>,
    /// Linear RGB per point.
    pub init_colors: Option<Vec<[f64; 3]>>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub scene_extent: f64,
    pub background: [f64; 3],
    /// Ground-truth mesh, when the dataset ships one.
    pub mesh_path: Option<PathBuf>,
    /// Ground-truth depth maps per view, when the dataset ships them.
    pub depth_paths: Vec<Option<PathBuf>>,
}

impl SceneDataset {
    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn train_cameras(&self) -> Vec<CameraModel> {
        self.train.iter().map(|&i| self.cameras[i].clone()).collect()
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.cameras.len() != self.images.len() || self.names.len() != self.cameras.len() {
            return Err(Error::Dataset("camera and image counts differ".into()));
        }
        for (cam, img) in self.cameras.iter().zip(&self.images) {
            if cam.width != img.width || cam.height != img.height {
                return Err(Error::Dataset(format!(
                    "image {}x{} does not match camera {}x{}",
                    img.width, img.height, cam.width, cam.height
                )));
            }
        }
        if self.train.is_empty() {
            return Err(Error::Dataset("no training views".into()));
        }
        if !(self.scene_extent > 0.0) {
            return Err(Error::Dataset(format!("scene extent {}", self.scene_extent)));
        }
        Ok(())
    }
}

/// `1.1 ×` the largest distance of a camera center from their centroid.
pub fn scene_extent(cameras: &[CameraModel]) -> f64 {
    if cameras.is_empty() {
        return 0.0;
    }
    let centers: Vec<Vec3> = cameras.iter().map(|c| c.center()).collect();
    let centroid = centers.iter().sum::<Vec3>() / centers.len() as f64;
    let radius = centers.iter().map(|c| (c - centroid).norm()).fold(0.0, f64::max);
    if radius > 0.0 {
        1.1 * radius
    } else {
        1.0
    }
}

/// Loads a dataset directory. Views are ordered by image filename.
pub fn load_dataset(root: &Path) -> Result<SceneDataset> {
    let manifest_path = root.join(CAMERAS_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(manifest_path.clone()),
        _ => Error::Io(e),
    })?;
    let mut manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Dataset(format!("{}: {e}", manifest_path.display())))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::VersionMismatch { found: manifest.version, expected: MANIFEST_VERSION });
    }
    if manifest.frames.is_empty() {
        return Err(Error::Dataset("no frames".into()));
    }
    manifest.frames.sort_by(|a, b| a.image.cmp(&b.image));
    let cameras = manifest.frames.iter().map(CameraRecord::camera).collect::<Result<Vec<_>>>()?;
    let images = manifest
        .frames
        .par_iter()
        .map(|f| read_png(&root.join(&f.image)))
        .collect::<Result<Vec<_>>>()?;
    let ply = read_ply(&root.join(&manifest.points))?;
    if ply.positions.is_empty() {
        return Err(Error::Dataset("no initialization points".into()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, f) in manifest.frames.iter().enumerate() {
        match f.split.as_str() {
            "train" => train.push(i),
            "test" => test.push(i),
            s => return Err(Error::Dataset(format!("unknown split {s:?}"))),
        }
    }
    let train_cams: Vec<CameraModel> = train.iter().map(|&i| cameras[i].clone()).collect();
    let ds = SceneDataset {
        names: manifest.frames.iter().map(|f| f.name.clone()).collect(),
        scene_extent: scene_extent(&train_cams),
        cameras,
        images,
        init_points: ply.positions.iter().map(|p| Vec3::from(*p)).collect(),
        init_colors: ply.colors.map(|c| c.iter().map(|p| p.map(srgb8_to_linear)).collect()),
        train,
        test,
        background: manifest.background,
        mesh_path: manifest.mesh.map(|m| root.join(m)),
        depth_paths: manifest.frames.iter().map(|f| f.depth.as_ref().map(|d| root.join(d))).collect(),
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes images, points and `cameras.json`. Returns the manifest so that
/// callers can add ground-truth entries and rewrite it.
pub fn save_dataset(root: &Path, ds: &SceneDataset) -> Result<DatasetManifest> {
    ds.validate()?;
    std::fs::create_dir_all(root.join("images"))?;
    let mut frames = Vec::with_capacity(ds.len());
    for (i, (cam, img)) in ds.cameras.iter().zip(&ds.images).enumerate() {
        let image = format!("images/{}.png", ds.names[i]);
        write_png(&root.join(&image), img)?;
        let split = if ds.test.contains(&i) { "test" } else { "train" };
        frames.push(CameraRecord::from_camera(&ds.names[i], &image, split, cam));
    }
    let colors: Option<Vec<[u8; 3]>> =
        ds.init_colors.as_ref().map(|c| c.iter().map(|p| p.map(linear_to_srgb8)).collect());
    write_points(&root.join("points.ply"), &ds.init_points, colors.as_deref())?;
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        background: ds.background,
        points: "points.ply".into(),
        mesh: None,
        frames,
    };
    write_manifest(root, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(root: &Path, manifest: &DatasetManifest) -> Result<()> {
    std::fs::write(root.join(CAMERAS_FILE), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SceneDataset {
        let cams: Vec<CameraModel> = [-1.0, 1.0]
            .iter()
            .map(|&x| CameraModel::look_at(Vec3::new(x, -3.0, 0.5), Vec3::zeros(), Vec3::z(), 10.0, 8, 6).unwrap())
            .collect();
        let mut images = vec![RgbImage::filled(8, 6, [0.2, 0.4, 0.6]), RgbImage::filled(8, 6, [0.9, 0.1, 0.0])];
        images.iter_mut().for_each(RgbImage::quantize_srgb8);
        SceneDataset {
            names: vec!["000".into(), "001".into()],
            scene_extent: scene_extent(&cams[..1]),
            cameras: cams,
            images,
            init_points: vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.5, 0.25, -0.125)],
            init_colors: Some(vec![[srgb8_to_linear(10), srgb8_to_linear(20), srgb8_to_linear(30)]; 2]),
            train: vec![0],
            test: vec![1],
            background: [0.0; 3],
            mesh_path: None,
            depth_paths: vec![None, None],
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        save_dataset(dir.path(), &ds).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.images, ds.images);
        assert_eq!(back.train, vec![0]);
        assert_eq!(back.test, vec![1]);
        assert_eq!(back.init_colors, ds.init_colors);
        for (a, b) in back.cameras.iter().zip(&ds.cameras) {
            assert_eq!(a, b);
        }
        assert_eq!(back.scene_extent, ds.scene_extent);
        // loading is pure
        assert_eq!(load_dataset(dir.path()).unwrap(), back);
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        let mut manifest = save_dataset(dir.path(), &ds).unwrap();
        manifest.frames[0].world_to_camera[0] = 1.5;
        write_manifest(dir.path(), &manifest).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
    }

    #[test]
    fn size_mismatch_and_missing_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        let mut manifest = save_dataset(dir.path(), &ds).unwrap();
        manifest.frames[1].width = 9;
        manifest.frames[1].cx = 4.5;
        write_manifest(dir.path(), &manifest).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
        std::fs::remove_file(dir.path().join(CAMERAS_FILE)).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::MissingFile(_))));
        std::fs::write(dir.path().join(CAMERAS_FILE), "{ not json").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
    }

    #[test]
    fn extent_of_a_camera_ring() {
        let cams: Vec<CameraModel> = (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 8.0;
                CameraModel::look_at(Vec3::new(2.0 * a.cos(), 2.0 * a.sin(), 0.0), Vec3::zeros(), Vec3::z(), 10.0, 4, 4)
                    .unwrap()
            })
            .collect();
        assert!((scene_extent(&cams) - 2.2).abs() < 1e-12);
    }
}
