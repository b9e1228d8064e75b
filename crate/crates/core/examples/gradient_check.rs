//! Compares analytic gradients with central differences on random scenes.
//!
//! cargo run --release --example gradient_check [seed]

use surfsplat::gradients::{gradcheck, GradcheckConfig};

fn main() -> surfsplat::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let report = gradcheck(&GradcheckConfig { seed, ..Default::default() })?;
    println!(
        "{} parameters, {} near branch points, {}/{} within {:.0e} (worst {:.2e}): {}",
        report.parameters,
        report.excluded,
        report.passed,
        report.checked,
        report.tolerance,
        report.max_rel_error,
        if report.ok() { "ok" } else { "FAILED" }
    );
    for f in report.failures.iter().take(5) {
        println!("  scene {} {}: analytic {:.6e} numeric {:.6e}", f.scene, f.param, f.analytic, f.numeric);
    }
    Ok(())
}
