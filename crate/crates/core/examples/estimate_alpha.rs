//! Estimate the noise and signal variances, and their ratio, from one series.
//!
//! Run with `cargo run --example estimate_alpha`.

use fhp::{scalar_hp, ModelParams};

pub fn run_example() -> fhp::Result<()> {
    let (mu, tau) = (2.0, 0.5);
    let params = ModelParams::new(2000, vec![mu], vec![tau], 42)?;
    let sim = fhp::model_sim::simulate(&params)?;
    let x = sim.x.column(0);

    let est = scalar_hp::estimate_from_series(x)?;
    println!("true:      mu = {mu}, tau = {tau}, alpha = {}", mu / tau);
    println!(
        "estimated: mu = {:.4}, tau = {:.4}, alpha = {:?}, status {:?}",
        est.mu_hat, est.tau_hat, est.alpha_hat, est.status
    );
    let sd = scalar_hp::mu_estimator_variance(mu, tau, params.n)?.sqrt();
    println!(
        "standard deviation of the noise estimate at n = {}: {sd:.4}",
        params.n
    );

    // Straight lines carry no noise: the estimate is clamped to zero and the
    // smoother leaves the data alone.
    let line: Vec<f64> = (0..30).map(|i| 1.0 + 0.1 * i as f64).collect();
    let flat = scalar_hp::estimate_from_series(&line)?;
    println!(
        "affine series: status {:?}, smoothing level {}",
        flat.status,
        flat.smoothing_alpha(scalar_hp::DEFAULT_ALPHA_MAX)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
