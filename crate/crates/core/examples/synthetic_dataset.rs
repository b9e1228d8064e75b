//! Generates a ray-traced synthetic scene, writes it as a dataset and loads
//! it back.
//!
//! cargo run --release --example synthetic_dataset [sphere|cube|two-planes] [out_dir]

use std::path::PathBuf;

use surfsplat::io::load_dataset;
use surfsplat::synthetic::{generate_synthetic_scene, SceneKind};

fn main() -> surfsplat::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("cube").parse()?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(format!("surfsplat-{kind}")));
    let scene = generate_synthetic_scene(kind, 12, 96, 0)?;
    scene.save(&out)?;
    let ds = load_dataset(&out)?;
    let same = ds.images.iter().zip(&scene.dataset.images).all(|(a, b)| a == b);
    println!(
        "{kind}: {} views ({} held out), {} init points, extent {:.3}, ground-truth mesh {} triangles",
        ds.len(),
        ds.test.len(),
        ds.init_points.len(),
        ds.scene_extent,
        scene.mesh.triangles.len()
    );
    println!("reloaded images identical: {same}; written to {}", out.display());
    Ok(())
}
