//! Best linear predictor of the trend given the data, compared with the
//! filter at the optimal smoothing level.
//!
//! Run with `cargo run --example conditional_mean`.

use fhp::diffop::Smoother;
use fhp::model_sim::ConditionalMean;
use fhp::{ModelParams, Simulator};

pub fn run_example() -> fhp::Result<()> {
    let (mu, tau) = (0.5, 2.0);
    let sim = Simulator::new(ModelParams::new(40, vec![mu], vec![tau], 11)?)?;
    let draw = sim.draw_component(0, 0);
    let y0 = sim.y0(0);

    let cm = ConditionalMean::new(mu, tau, draw.x.len())?;
    let predicted = cm.apply(&draw.x, &y0)?;
    let filtered = Smoother::new(draw.x.len(), mu / tau)?.apply(&draw.x)?;

    let rms = |a: &[f64]| {
        (a.iter()
            .zip(&draw.y)
            .map(|(p, y)| (p - y).powi(2))
            .sum::<f64>()
            / a.len() as f64)
            .sqrt()
    };
    println!("rms error, conditional mean:        {:.4}", rms(&predicted));
    println!("rms error, filter at alpha = mu/tau: {:.4}", rms(&filtered));
    println!("rms error, raw data:                {:.4}", rms(&draw.x));
    Ok(())
}

#[allow(dead_code)]
fn main() -> fhp::Result<()> {
    run_example()
}
