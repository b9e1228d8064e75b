//! Intersects pixel rays with a tilted surfel and compares the homogeneous
//! plane solution with plain ray-plane geometry.
//!
//! cargo run --release --example ray_splat

use surfsplat::geometry::{ray_splat, CameraModel, SplatGeometry, Vec3};

fn main() -> surfsplat::Result<()> {
    let cam = CameraModel::look_at(Vec3::new(0.0, -3.0, 1.0), Vec3::zeros(), Vec3::z(), 80.0, 64, 64)?;
    let tu = Vec3::new(1.0, 0.0, 0.2).normalize();
    let tv = Vec3::new(0.0, 1.0, 0.5).normalize();
    let tv = (tv - tu * tu.dot(&tv)).normalize();
    let splat = SplatGeometry::new(Vec3::new(0.1, 0.0, -0.1), tu, tv, 0.4, 0.2)?;
    let n = splat.normal();
    for (x, y) in [(32.5, 32.5), (20.5, 40.5), (45.5, 28.5)] {
        let Some(hit) = ray_splat(&splat, &cam, x, y) else {
            println!("pixel ({x}, {y}): ray parallel to the splat");
            continue;
        };
        let (o, d) = cam.ray(x, y);
        let p = o + d * ((splat.center - o).dot(&n) / d.dot(&n));
        let rel = p - splat.center;
        let (u, v) = (rel.dot(&splat.tangent_u) / splat.scale_u, rel.dot(&splat.tangent_v) / splat.scale_v);
        println!(
            "pixel ({x}, {y}): u {:+.6} v {:+.6} depth {:.6} G {:.6} | ray-plane u {u:+.6} v {v:+.6}",
            hit.u, hit.v, hit.z, hit.gaussian
        );
    }
    Ok(())
}
