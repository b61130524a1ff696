//! Filter a functional time series with a diagonal smoothing operator, both
//! supplied and estimated.
//!
//! Run with `cargo run --example functional_filter`.

use fhp::{functional_hp, BasisKind, BasisSpec, DiagonalOperator, ModelParams};

pub fn run_example() -> fhp::Result<()> {
    let params = ModelParams::new(200, vec![1.0, 0.5, 0.25], vec![0.5, 0.5, 1.0], 7)?;
    let sim = fhp::model_sim::simulate(&params)?;
    let spec = BasisSpec::sine(params.components(), 128)?;
    let curves = spec.reconstruct_series(&sim.x)?;
    let x = spec.project_series(&curves)?;

    let b = DiagonalOperator::smoothing(vec![1.0, 1.0, 1.0])?;
    let fixed = functional_hp::filter(&x, &b)?;
    println!(
        "fixed B = I: trend error {:.3}",
        fixed.trend.max_abs_diff(&sim.y)
    );

    let (filtered, est) = functional_hp::filter_estimated(&x, fhp::scalar_hp::DEFAULT_ALPHA_MAX)?;
    println!(
        "estimated B: trend error {:.3}",
        filtered.trend.max_abs_diff(&sim.y)
    );
    println!("optimal B:   {:?}", params.optimal_alpha());
    let report = est.report(BasisKind::Sine);
    for c in &report.components {
        println!(
            "  j = {}: alpha_hat = {:?}, status {:?}",
            c.j, c.alpha_hat, c.status
        );
    }
    let diag = est.operator.trace_diagnostic();
    println!("trace of B_hat: {:.3}", diag.trace);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
