//! Trains on the synthetic sphere and scores the held-out views.
//!
//! cargo run --release --example train_sphere [iterations] [out_dir]

use std::path::PathBuf;

use surfsplat::synthetic::{generate_synthetic_scene, SceneKind};
use surfsplat::trainer::{evaluate_views, load_checkpoint, save_checkpoint, TrainConfig, Trainer};

fn main() -> surfsplat::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("surfsplat-train"));
    std::fs::create_dir_all(&out)?;
    let scene = generate_synthetic_scene(SceneKind::Sphere, 24, 64, 0)?;
    let ds = &scene.dataset;
    let mut trainer = Trainer::new(ds, TrainConfig::scaled_to(iterations))?;
    trainer.run(ds, |_, m| {
        if m.step % 100 == 0 {
            println!("step {:>5} splats {:>6} loss {:.5} psnr {:.2}", m.step, m.splats, m.total, m.psnr);
        }
        Ok(())
    })?;
    for s in evaluate_views(&trainer.model, ds, &ds.test, &trainer.settings)? {
        println!("held-out {}: PSNR {:.2} dB, SSIM {:.4}", s.name, s.psnr, s.ssim);
    }
    let path = out.join("sphere.ckpt");
    save_checkpoint(&path, &trainer.checkpoint())?;
    let back = load_checkpoint(&path)?;
    println!("checkpoint {} reloads with {} splats", path.display(), back.model.len());
    Ok(())
}
