//! Trains briefly on the synthetic cube, fuses rendered depth into a TSDF
//! volume and reports the Chamfer distance for both depth statistics.
//!
//! cargo run --release --example extract_mesh [iterations] [out_dir]

use std::path::PathBuf;

use surfsplat::io::write_mesh;
use surfsplat::meshing::{extract_from_model, mesh_chamfer, model_bounds, DepthMode, FusionConfig};
use surfsplat::synthetic::{generate_synthetic_scene, SceneKind};
use surfsplat::trainer::{TrainConfig, Trainer};

fn main() -> surfsplat::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("surfsplat-mesh"));
    std::fs::create_dir_all(&out)?;
    let scene = generate_synthetic_scene(SceneKind::Cube, 24, 64, 0)?;
    let ds = &scene.dataset;
    let mut trainer = Trainer::new(ds, TrainConfig::scaled_to(iterations))?;
    trainer.run(ds, |_, _| Ok(()))?;
    let cams = ds.train_cameras();
    let bounds = model_bounds(&trainer.model, &cams, ds.scene_extent, 0.05)?;
    for mode in [DepthMode::Median, DepthMode::Expected] {
        let fusion = FusionConfig { depth_mode: mode, ..FusionConfig::for_extent(ds.scene_extent) };
        let mesh = extract_from_model(&trainer.model, &cams, bounds, &fusion, &trainer.settings)?;
        let cd = mesh_chamfer(&mesh, &scene.mesh, 50_000, 0)?;
        let path = out.join(format!("cube_{mode:?}.ply").to_lowercase());
        write_mesh(&path, &mesh)?;
        println!("{mode:?}: {} triangles, Chamfer {cd:.4} ({:.2}% of the diagonal), {}", mesh.triangles.len(), 100.0 * cd / scene.diameter(), path.display());
    }
    Ok(())
}
