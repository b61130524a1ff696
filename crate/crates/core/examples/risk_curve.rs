//! Trace the exact mean-squared risk of the filter as a function of the
//! smoothing level and locate its minimum.
//!
//! Run with `cargo run --example risk_curve`.

use fhp::{AlphaGrid, ModelParams};

pub fn run_example() -> fhp::Result<()> {
    let params = ModelParams::new(30, vec![0.25, 1.0, 4.0], vec![1.0, 1.0, 1.0], 0)?;
    let grid = AlphaGrid::log_spaced(0.01, 100.0, 200)?;
    let report = fhp::model_sim::verify_optimality(&params, &grid)?;
    for c in &report.components {
        println!(
            "j = {}: best alpha on grid {:.4}, noise-to-signal ratio {:.4}, gap {:.2} steps",
            c.j, c.argmin, c.alpha_star, c.gap_steps
        );
    }
    println!(
        "minimum at the ratio for every component: {}",
        report.passed
    );

    let coarse = [0.1, 0.5, 1.0, 2.0, 10.0];
    let risk = fhp::model_sim::risk_curve(1.0, 1.0, 30, &coarse)?;
    for (a, r) in coarse.iter().zip(risk) {
        println!("  alpha = {a:>4}: risk {r:.5}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
