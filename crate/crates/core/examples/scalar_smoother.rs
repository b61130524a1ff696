//! Smooth a scalar series with the Hodrick-Prescott filter.
//!
//! Run with `cargo run --example scalar_smoother`.

use fhp::diffop::Smoother;
use fhp::scalar_hp;

pub fn run_example() -> fhp::Result<()> {
    // A quadratic trend plus a deterministic wiggle.
    let n = 120;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            4.0 * t * t + 0.3 * (37.0 * t).sin()
        })
        .collect();

    for alpha in [0.0, 1.0, 100.0, 1600.0, 1e8] {
        let trend = scalar_hp::hp_filter(&x, alpha)?;
        let objective = scalar_hp::hp_objective(&x, &trend, alpha)?;
        let rough: f64 = trend
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2))
            .sum();
        println!("alpha = {alpha:>8.0e}: objective {objective:10.4}, roughness {rough:.3e}");
    }

    // Affine series pass through unchanged at any smoothing level.
    let line: Vec<f64> = (0..50).map(|i| 2.0 - 0.5 * i as f64).collect();
    let smoother = Smoother::new(line.len(), 1e6)?;
    let out = smoother.apply(&line)?;
    let err = out
        .iter()
        .zip(&line)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("affine series, alpha = 1e6: max change {err:.2e}");
    assert!(err < 1e-8);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
