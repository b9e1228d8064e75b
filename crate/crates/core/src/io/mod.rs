//! File formats: PLY, OBJ, PNG, PFM and the dataset layout.

mod dataset;
mod images;
mod ply;

pub use dataset::{
    load_dataset, save_dataset, scene_extent, write_manifest, CameraRecord, DatasetManifest, SceneDataset, CAMERAS_FILE,
};
pub use images::{read_pfm, read_png, write_pfm, write_png, write_png_raw};
pub use ply::{read_mesh, read_ply, write_mesh, write_points, PlyData};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::meshing::TriangleMesh;

/// Maps a missing path to [`Error::MissingFile`].
pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Writes a mesh as ASCII Wavefront OBJ.
pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    mesh.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    if let Some(normals) = &mesh.normals {
        for n in normals {
            writeln!(w, "vn {} {} {}", n[0], n[1], n[2])?;
        }
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        if mesh.normals.is_some() {
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
        } else {
            writeln!(w, "f {a} {b} {c}")?;
        }
    }
    w.flush()?;
    Ok(())
}
