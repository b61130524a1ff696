//! Monte Carlo study of the estimators as the series grows.
//!
//! Run with `cargo run --release --example monte_carlo`.

use fhp::ModelParams;

pub fn run_example() -> fhp::Result<()> {
    let params = ModelParams::new(100, vec![1.0, 0.25], vec![2.0, 0.5], 3)?;
    let report = fhp::model_sim::mc_consistency(
        &params,
        &[50, 200, 800],
        200,
        fhp::scalar_hp::DEFAULT_ALPHA_MAX,
    )?;
    for l in &report.lengths {
        println!("n = {} ({} reps)", l.n, l.reps);
        for c in &l.components {
            println!(
                "  j = {}: mean mu {:.4} (se {:.4}), rmse mu {:.4}, mean tau {:.4}, median |alpha err| {:.4}",
                c.j, c.mean_mu, c.se_mu, c.rmse_mu, c.mean_tau, c.median_abs_alpha_error
            );
        }
        println!("  median max alpha error: {:.4}", l.median_max_alpha_error);
    }
    println!("consistent: {}", report.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
