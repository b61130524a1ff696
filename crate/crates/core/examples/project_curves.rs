//! Project sampled curves onto the sine basis and reconstruct them.
//!
//! Run with `cargo run --example project_curves`.

use std::f64::consts::PI;

use fhp::{BasisSpec, SampledCurve};

pub fn run_example() -> fhp::Result<()> {
    let spec = BasisSpec::sine(8, 256)?;
    println!(
        "basis: {} with J = {}, m = {} grid points, Gram deviation {:.2e}",
        spec.kind(),
        spec.truncation(),
        spec.grid_len(),
        spec.gram_deviation()
    );

    // A curve lying exactly in the span of the basis: 3 e_2 - 0.5 e_5.
    let curve = SampledCurve::from_fn(spec.grid().clone(), |t| {
        2f64.sqrt() * (3.0 * (2.0 * PI * t).sin() - 0.5 * (5.0 * PI * t).sin())
    })?;
    let coeffs = spec.project(&curve)?;
    println!("coefficients: {coeffs:.6?}");
    assert!((coeffs[1] - 3.0).abs() < 1e-9 && (coeffs[4] + 0.5).abs() < 1e-9);

    let back = spec.reconstruct(&coeffs)?;
    let err = back
        .values
        .iter()
        .zip(&curve.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max reconstruction error: {err:.2e}");
    assert!(err < 1e-9);

    // A curve outside the span loses only its high-frequency part.
    let bump = SampledCurve::from_fn(spec.grid().clone(), |t| t * (1.0 - t))?;
    let c = spec.project(&bump)?;
    let kept: f64 = c.iter().map(|v| v * v).sum();
    println!(
        "t(1-t): energy kept by J = 8 is {:.6} of {:.6}",
        kept,
        spec.norm_sq(&bump.values)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
