//! Renders a few surfels and writes color, depth, normal and alpha images.
//!
//! cargo run --release --example render_splats [out_dir]

use std::path::PathBuf;

use surfsplat::geometry::{quaternion_from_rotation, CameraModel, Mat3, Vec3};
use surfsplat::io::{write_pfm, write_png_raw};
use surfsplat::model::SplatModel;
use surfsplat::rasterizer::{render, RenderSettings};
use surfsplat::sh::{rgb_to_dc, MAX_SH_COEFFS};

fn flat(rgb: [f64; 3]) -> [[f64; 3]; MAX_SH_COEFFS] {
    let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
    sh[0] = rgb.map(rgb_to_dc);
    sh
}

fn main() -> surfsplat::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("surfsplat-render"));
    std::fs::create_dir_all(&out)?;
    let mut model = SplatModel::new(0);
    let tilt = |a: f64| quaternion_from_rotation(&Mat3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos()));
    model.push(Vec3::new(-0.5, 0.0, 0.0), tilt(1.2), [0.4, 0.25], 0.9, flat([0.9, 0.3, 0.2]));
    model.push(Vec3::new(0.4, 0.3, 0.1), tilt(0.6), [0.3, 0.3], 0.7, flat([0.2, 0.7, 0.3]));
    // edge-on: only the screen-space filter keeps it visible
    model.push(Vec3::new(0.1, -0.4, -0.5), tilt(0.0), [0.5, 0.1], 0.95, flat([0.2, 0.3, 0.9]));
    let cam = CameraModel::look_at(Vec3::new(0.0, -3.0, 0.0), Vec3::zeros(), Vec3::z(), 150.0, 128, 128)?;
    let settings = RenderSettings { background: [0.05; 3], ..Default::default() };
    let (_, img) = render(&model, &cam, &settings)?;
    let (w, h) = (img.width, img.height);
    write_png_raw(&out.join("color.png"), w, h, &img.color)?;
    write_pfm(&out.join("depth.pfm"), w, h, &img.median_depth)?;
    let normals: Vec<[f64; 3]> = img.normal.iter().map(|n| n.map(|c| 0.5 * (c + 1.0))).collect();
    write_png_raw(&out.join("normal.png"), w, h, &normals)?;
    let alpha: Vec<[f64; 3]> = img.alpha.iter().map(|&a| [a; 3]).collect();
    write_png_raw(&out.join("alpha.png"), w, h, &alpha)?;
    let covered = img.alpha.iter().filter(|&&a| a > 0.5).count();
    println!("{covered} of {} pixels have alpha > 0.5; images in {}", w * h, out.display());
    Ok(())
}
