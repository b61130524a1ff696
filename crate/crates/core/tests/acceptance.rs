//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line. Run with
//! `cargo test --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fhp::diffop::{self, Smoother};
use fhp::model_sim::{self, component_covariances, ConditionalMean};
use fhp::{
    functional_hp, scalar_hp, AlphaGrid, CoefficientMatrix, DiagonalOperator, ModelParams,
    Simulator,
};

/// Prints the verdict line and enforces both the check and the time limit.
fn report(criterion: u32, passed: bool, elapsed: Duration, limit: Duration, detail: String) {
    let ok = passed && elapsed < limit;
    println!(
        "criterion {criterion}: {} ({detail}; {:.2}s, limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
    assert!(
        elapsed < limit,
        "criterion {criterion} exceeded {limit:?}: {elapsed:?}"
    );
}

fn dense_p(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n - 2, n, |r, c| match c as isize - r as isize {
        0 | 2 => 1.0,
        1 => -2.0,
        _ => 0.0,
    })
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_1_risk_minimized_at_noise_to_signal_ratio() {
    let start = Instant::now();
    let params = ModelParams::new(30, vec![0.25, 1.0, 4.0], vec![1.0, 1.0, 1.0], 0).unwrap();
    let grid = AlphaGrid::log_spaced(0.01, 100.0, 200).unwrap();
    let r = model_sim::verify_optimality(&params, &grid).unwrap();
    let passed = r.components.iter().all(|c| c.gap_steps <= 1.0);
    let gaps: Vec<String> = r
        .components
        .iter()
        .map(|c| {
            format!(
                "alpha*={} argmin={:.4} gap={:.2}",
                c.alpha_star, c.argmin, c.gap_steps
            )
        })
        .collect();
    report(
        1,
        passed && r.passed,
        start.elapsed(),
        Duration::from_secs(30),
        gaps.join(", "),
    );
}

#[test]
fn criterion_2_variance_estimators_unbiased() {
    let start = Instant::now();
    let params = ModelParams::new(200, vec![1.0], vec![1.0], 2).unwrap();
    let r = model_sim::mc_consistency(&params, &[200], 2000, scalar_hp::DEFAULT_ALPHA_MAX).unwrap();
    let c = &r.lengths[0].components[0];
    let mu_ok = (c.mean_mu - 1.0).abs() <= 3.0 * c.se_mu;
    let tau_ok = (c.mean_tau - 1.0).abs() <= 3.0 * c.se_tau;
    report(
        2,
        mu_ok && tau_ok,
        start.elapsed(),
        Duration::from_secs(60),
        format!(
            "mean mu {:.4} (se {:.4}), mean tau {:.4} (se {:.4})",
            c.mean_mu, c.se_mu, c.mean_tau, c.se_tau
        ),
    );
}

#[test]
fn criterion_3_noise_estimator_variance() {
    let start = Instant::now();
    let params = ModelParams::new(103, vec![1.0], vec![1.0], 3).unwrap();
    let r =
        model_sim::mc_consistency(&params, &[103], 10_000, scalar_hp::DEFAULT_ALPHA_MAX).unwrap();
    let c = &r.lengths[0].components[0];
    let theory = scalar_hp::mu_estimator_variance(1.0, 1.0, 103).unwrap();
    let passed = (0.0598..=0.0809).contains(&c.var_mu) && (theory - 0.0703125).abs() < 1e-12;
    report(
        3,
        passed,
        start.elapsed(),
        Duration::from_secs(60),
        format!("empirical var {:.5}, formula {theory}", c.var_mu),
    );
}

#[test]
fn criterion_4_ratio_estimator_consistent() {
    let start = Instant::now();
    let params = ModelParams::new(
        100,
        vec![1.0, 0.5, 0.25, 0.125],
        vec![4.0, 2.0, 1.0, 0.5],
        4,
    )
    .unwrap();
    let r = model_sim::mc_consistency(
        &params,
        &[100, 400, 1600],
        300,
        scalar_hp::DEFAULT_ALPHA_MAX,
    )
    .unwrap();
    let med: Vec<f64> = r.lengths.iter().map(|l| l.median_max_alpha_error).collect();
    let passed = med.windows(2).all(|w| w[1] < w[0]);
    report(
        4,
        passed,
        start.elapsed(),
        Duration::from_secs(300),
        format!("median max |alpha_hat - alpha| by n: {med:.4?}"),
    );
}

#[test]
fn criterion_5_banded_solver_matches_dense() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for n in [5, 17, 101, 500] {
        let p = dense_p(n);
        let ptp = p.transpose() * &p;
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let alpha = 10f64.powf(rng.gen_range(-3.0..4.0));
            let a = DMatrix::identity(n, n) + &ptp * alpha;
            let dense = a.lu().solve(&DVector::from_column_slice(&x)).unwrap();
            let banded = Smoother::new(n, alpha).unwrap().apply(&x).unwrap();
            worst = worst.max(rel_err(&banded, dense.as_slice()));

            // Identity cases: no smoothing, and affine input.
            let same = Smoother::new(n, 0.0).unwrap().apply(&x).unwrap();
            worst_identity = worst_identity.max(rel_err(&same, &x));
            let (c0, c1) = (rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0));
            let line: Vec<f64> = (0..n).map(|i| c0 + c1 * i as f64).collect();
            let kept = Smoother::new(n, alpha).unwrap().apply(&line).unwrap();
            worst_identity = worst_identity.max(rel_err(&kept, &line));
        }
    }
    report(
        5,
        worst <= 1e-10 && worst_identity <= 1e-10,
        start.elapsed(),
        Duration::from_secs(10),
        format!("max relative error vs dense {worst:.2e}, identity cases {worst_identity:.2e}"),
    );
}

#[test]
fn criterion_6_filter_output_minimizes_objective() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, j) = (50, 3);
    let mut failures = 0;
    let mut smallest_gain = f64::INFINITY;
    for _ in 0..100 {
        let cols: Vec<Vec<f64>> = (0..j)
            .map(|_| {
                let mut level = 0.0;
                (0..n)
                    .map(|_| {
                        level += rng.gen_range(-1.0..1.0);
                        level + rng.gen_range(-1.0..1.0)
                    })
                    .collect()
            })
            .collect();
        let x = CoefficientMatrix::from_columns(cols).unwrap();
        let alphas: Vec<f64> = (0..j)
            .map(|_| 10f64.powf(rng.gen_range(-2.0..3.0)))
            .collect();
        let b = DiagonalOperator::smoothing(alphas).unwrap();
        let y = functional_hp::filter(&x, &b).unwrap().trend;
        let best = functional_hp::functional_objective(&x, &y, &b).unwrap();
        for _ in 0..50 {
            let delta: Vec<f64> = (0..n * j).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            let mut z = y.clone();
            for (k, d) in delta.iter().enumerate() {
                let (i, c) = (k % n, k / n);
                z.set(i, c, z.get(i, c) + 1e-3 * d / norm);
            }
            let value = functional_hp::functional_objective(&x, &z, &b).unwrap();
            smallest_gain = smallest_gain.min(value - best);
            if value < best {
                failures += 1;
            }
        }
    }
    report(
        6,
        failures == 0,
        start.elapsed(),
        Duration::from_secs(30),
        format!("{failures} of 5000 perturbations beat the filter; smallest increase {smallest_gain:.3e}"),
    );
}

#[test]
fn criterion_7_ratio_matches_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 1000 {
        let n = rng.gen_range(5..400);
        let mu = 10f64.powf(rng.gen_range(-2.0..2.0));
        let tau = 10f64.powf(rng.gen_range(-2.0..2.0));
        let params = ModelParams::new(n, vec![mu], vec![tau], rng.gen()).unwrap();
        let x = model_sim::simulate(&params).unwrap().x.column(0).to_vec();
        let px = diffop::apply_p(&x).unwrap();
        let est = scalar_hp::estimate_alpha(&px).unwrap();
        if est.status != fhp::EstimateStatus::Ok {
            continue;
        }
        let ratio = est.mu_hat / est.tau_hat;
        let closed = scalar_hp::alpha_closed_form(&px)
            .unwrap()
            .expect("nondegenerate");
        worst = worst.max((ratio - closed).abs() / closed.abs());
        checked += 1;
    }
    report(
        7,
        worst <= 1e-12,
        start.elapsed(),
        Duration::from_secs(5),
        format!("max relative difference {worst:.2e} over {checked} series"),
    );
}

#[test]
fn criterion_8_conditional_expectation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // Dense oracle y0 + Sigma_XY Sigma_X^{-1} (x - y0).
    let mut worst = 0.0f64;
    for n in [3, 4, 5, 8, 12, 20, 33, 50] {
        for _ in 0..5 {
            let mu = 10f64.powf(rng.gen_range(-2.0..2.0));
            let tau = 10f64.powf(rng.gen_range(-2.0..2.0));
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y0: Vec<f64> = (0..n).map(|i| 0.5 - 0.1 * i as f64).collect();
            let cov = component_covariances(mu, tau, n).unwrap();
            let d = DVector::from_iterator(n, x.iter().zip(&y0).map(|(a, b)| a - b));
            let w = cov.sigma_x.clone().lu().solve(&d).unwrap();
            let oracle: Vec<f64> = (&cov.sigma_xy * w)
                .iter()
                .zip(&y0)
                .map(|(a, b)| a + b)
                .collect();
            let got = model_sim::conditional_expectation(&x, mu, tau, &y0).unwrap();
            let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = got
                .iter()
                .zip(&oracle)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(err / scale);
        }
    }

    // Residual Y - E[Y|X] is uncorrelated with X.
    let (n, reps, mu, tau) = (12, 5000u64, 0.7, 1.3);
    let params = ModelParams::new(n, vec![mu], vec![tau], 88)
        .unwrap()
        .with_gamma(vec![[1.0, -2.0]])
        .unwrap();
    let sim = Simulator::new(params).unwrap();
    let y0 = sim.y0(0);
    let cm = ConditionalMean::new(mu, tau, n).unwrap();
    let mut products = vec![Vec::with_capacity(reps as usize); n * n];
    for rep in 0..reps {
        let draw = sim.draw_component(0, rep);
        let e = cm.apply(&draw.x, &y0).unwrap();
        for a in 0..n {
            let r = draw.y[a] - e[a];
            for b in 0..n {
                products[a * n + b].push(r * (draw.x[b] - y0[b]));
            }
        }
    }
    let mut worst_z = 0.0f64;
    for p in &products {
        let k = p.len() as f64;
        let mean = p.iter().sum::<f64>() / k;
        let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        worst_z = worst_z.max(mean.abs() / (var / k).sqrt());
    }
    report(
        8,
        worst <= 1e-10 && worst_z <= 5.0,
        start.elapsed(),
        Duration::from_secs(60),
        format!("max error vs dense oracle {worst:.2e}, max |cross-moment|/SE {worst_z:.2}"),
    );
}
