//! Evaluates the training objective on a render and checks the single-pass
//! depth distortion against the pairwise sum.
//!
//! cargo run --release --example losses

use surfsplat::geometry::{CameraModel, Vec3};
use surfsplat::imgbuf::RgbImage;
use surfsplat::losses::{compute_losses, distortion_single_pass, LossTerms, LossWeights};
use surfsplat::model::SplatModel;
use surfsplat::rasterizer::{render, RenderSettings};
use surfsplat::sh::MAX_SH_COEFFS;

fn main() -> surfsplat::Result<()> {
    let mut model = SplatModel::new(0);
    for (i, z) in [-0.2, 0.0, 0.3].into_iter().enumerate() {
        let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
        sh[0][i] = 1.0;
        model.push(Vec3::new(0.1 * i as f64, z, 0.0), [0.9, 0.4, 0.1, 0.0], [0.4, 0.3], 0.6, sh);
    }
    model.normalize_rotations();
    let cam = CameraModel::look_at(Vec3::new(0.0, -3.0, 0.5), Vec3::zeros(), Vec3::z(), 60.0, 48, 48)?;
    let (_, out) = render(&model, &cam, &RenderSettings::default())?;
    let target = RgbImage::filled(48, 48, [0.4, 0.4, 0.4]);
    for (name, terms) in [
        ("photometric only", LossTerms { distortion: false, normal: false }),
        ("full", LossTerms::default()),
    ] {
        let (l, _) = compute_losses(&out, &target, &cam, &LossWeights::default(), terms, None)?;
        println!("{name:>16}: photometric {:.5} distortion {:.3e} normal {:.5} total {:.5}", l.photometric, l.distortion, l.normal, l.total);
    }
    let w = [0.3, 0.2, 0.25, 0.1];
    let m = [0.50, 0.52, 0.61, 0.90];
    let mut pairwise = 0.0;
    for i in 0..w.len() {
        for j in 0..i {
            pairwise += w[i] * w[j] * (m[i] - m[j]) * (m[i] - m[j]);
        }
    }
    println!("distortion single pass {:.12} pairwise {pairwise:.12}", distortion_single_pass(&w, &m));
    Ok(())
}
