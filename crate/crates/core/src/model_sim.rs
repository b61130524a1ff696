//! Ground-truth simulation of the functional mixed model and the exact
//! second-moment quantities used to check the filter against it.
//!
//! Component `j` of the model is
//!
//! ```text
//! Y^j = Z gamma_j + P'(PP')^{-1} V^j,   V^j ~ N(0, tau_j I_{n-2})
//! X^j = Y^j + U^j,                      U^j ~ N(0, mu_j I_n)
//! ```
//!
//! with components independent of each other. The dense matrices built here
//! are for verification at moderate `n` only; the filter itself never forms
//! them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::CoefficientMatrix;
use crate::diffop::{self, BandedCholesky, KernelBasis, RightInverse, Smoother};
use crate::error::{argument, domain, shape, Result};
use crate::rng::{Channel, NormalStream};
use crate::scalar_hp::{self, EstimateStatus};

/// Largest series length for which dense covariance matrices are built.
pub const MAX_DENSE_N: usize = 2000;

/// Ground-truth parameters of the simulation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    /// Kernel coordinates `(gamma_1, gamma_2)` of the deterministic trend, one
    /// pair per component.
    pub gamma: Vec<[f64; 2]>,
    /// Noise covariance eigenvalues.
    pub mu: Vec<f64>,
    /// Signal covariance eigenvalues.
    pub tau: Vec<f64>,
    pub seed: u64,
}

impl ModelParams {
    /// Parameters with a zero deterministic trend.
    pub fn new(n: usize, mu: Vec<f64>, tau: Vec<f64>, seed: u64) -> Result<Self> {
        let gamma = vec![[0.0, 0.0]; mu.len()];
        let p = Self {
            n,
            gamma,
            mu,
            tau,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: Vec<[f64; 2]>) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    /// Number of components `J`.
    pub fn components(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 5 {
            return Err(domain(format!("model needs n >= 5, got {}", self.n)));
        }
        let j = self.mu.len();
        if j == 0 {
            return Err(domain("model needs at least one component"));
        }
        if self.tau.len() != j || self.gamma.len() != j {
            return Err(domain(format!(
                "component counts differ: mu {}, tau {}, gamma {}",
                j,
                self.tau.len(),
                self.gamma.len()
            )));
        }
        for (name, values) in [("mu", &self.mu), ("tau", &self.tau)] {
            if let Some(k) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(domain(format!(
                    "{name}[{}] = {} must be positive and finite",
                    k + 1,
                    values[k]
                )));
            }
        }
        if self.gamma.iter().flatten().any(|g| !g.is_finite()) {
            return Err(domain("gamma must be finite"));
        }
        Ok(())
    }

    /// True smoothing levels `mu_j / tau_j`.
    pub fn optimal_alpha(&self) -> Vec<f64> {
        self.mu.iter().zip(&self.tau).map(|(m, t)| m / t).collect()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        let p = Self { n, ..self.clone() };
        p.validate()?;
        Ok(p)
    }
}

/// One draw of the model, all as `n x J` coefficient matrices (`v` is
/// `(n-2) x J`).
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub x: CoefficientMatrix,
    pub y: CoefficientMatrix,
    pub u: CoefficientMatrix,
    pub v: CoefficientMatrix,
}

/// A single component of one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDraw {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Simulator with the length-dependent factorizations cached.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: ModelParams,
    right_inverse: RightInverse,
    kernel: KernelBasis,
}

impl Simulator {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            right_inverse: RightInverse::new(params.n)?,
            kernel: diffop::kernel_z(params.n)?,
            params,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kernel(&self) -> &KernelBasis {
        &self.kernel
    }

    /// Deterministic trend `Z gamma_j` of component `j` (0-based).
    pub fn y0(&self, j: usize) -> Vec<f64> {
        self.kernel.combine(self.params.gamma[j])
    }

    pub fn draw_component(&self, j: usize, rep: u64) -> ComponentDraw {
        let p = &self.params;
        let n = p.n;
        let seed = p.seed;
        let v =
            NormalStream::new(seed, j as u64, rep, Channel::Signal).normals(n - 2, p.tau[j].sqrt());
        let u = NormalStream::new(seed, j as u64, rep, Channel::Noise).normals(n, p.mu[j].sqrt());
        let mut y = self
            .right_inverse
            .apply(&v)
            .expect("length fixed at construction");
        for (yi, y0) in y.iter_mut().zip(self.y0(j)) {
            *yi += y0;
        }
        let x = y.iter().zip(&u).map(|(a, b)| a + b).collect();
        ComponentDraw { x, y, u, v }
    }

    pub fn draw(&self, rep: u64) -> Simulation {
        let draws: Vec<ComponentDraw> = (0..self.params.components())
            .into_par_iter()
            .map(|j| self.draw_component(j, rep))
            .collect();
        let collect = |f: fn(&ComponentDraw) -> &Vec<f64>| {
            CoefficientMatrix::from_columns(draws.iter().map(|d| f(d).clone()).collect())
                .expect("simulated values are finite")
        };
        Simulation {
            x: collect(|d| &d.x),
            y: collect(|d| &d.y),
            u: collect(|d| &d.u),
            v: collect(|d| &d.v),
        }
    }
}

pub fn simulate(params: &ModelParams) -> Result<Simulation> {
    simulate_rep(params, 0)
}

pub fn simulate_rep(params: &ModelParams, rep: u64) -> Result<Simulation> {
    Ok(Simulator::new(params.clone())?.draw(rep))
}

/// Exact covariances of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCovariances {
    pub sigma_x: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    pub sigma_xy: DMatrix<f64>,
    /// `P'(PP')^{-2}P`, the covariance of `P'(PP')^{-1} V` per unit `tau`.
    pub m: DMatrix<f64>,
}

/// Builds `M = P'(PP')^{-2}P = P^+ (P^+)'` column by column.
pub fn trend_covariance_unit(n: usize) -> Result<DMatrix<f64>> {
    if n > MAX_DENSE_N {
        return Err(argument(format!(
            "dense covariance limited to n <= {MAX_DENSE_N}, got {n}"
        )));
    }
    let ri = RightInverse::new(n)?;
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = ri.apply(&ri.apply_transpose(&e)?)?;
        m.set_column(k, &DVector::from_vec(col));
        e[k] = 0.0;
    }
    // Symmetrize away rounding asymmetry.
    let mt = m.transpose();
    Ok((m + mt) * 0.5)
}

pub fn component_covariances(mu: f64, tau: f64, n: usize) -> Result<ComponentCovariances> {
    check_variances(mu, tau)?;
    let m = trend_covariance_unit(n)?;
    let sigma_y = &m * tau;
    let sigma_x = DMatrix::identity(n, n) * mu + &sigma_y;
    Ok(ComponentCovariances {
        sigma_x,
        sigma_xy: sigma_y.clone(),
        sigma_y,
        m,
    })
}

fn check_variances(mu: f64, tau: f64) -> Result<()> {
    if !(mu > 0.0) || !(tau > 0.0) {
        return Err(domain(format!(
            "variances must be positive, got mu = {mu}, tau = {tau}"
        )));
    }
    Ok(())
}

/// `E[Y | X]` for one component.
///
/// The gain `Sigma_XY Sigma_X^{-1} = tau M (mu I + tau M)^{-1}` is applied in
/// the equivalent banded form `P'(I + (mu/tau) PP')^{-1} (PP')^{-1} P`, which
/// stays well conditioned as `mu -> 0` and costs `O(n)` per application.
#[derive(Debug, Clone)]
pub struct ConditionalMean {
    inner: RightInverse,
    shrink: BandedCholesky,
}

impl ConditionalMean {
    pub fn new(mu: f64, tau: f64, n: usize) -> Result<Self> {
        check_variances(mu, tau)?;
        let inner = RightInverse::new(n)?;
        let shrink =
            BandedCholesky::factor(&inner.operator().outer_gram().shifted_identity(mu / tau))?;
        Ok(Self { inner, shrink })
    }

    pub fn len(&self) -> usize {
        self.inner.operator().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Sigma_XY Sigma_X^{-1} d`.
    pub fn apply_gain(&self, d: &[f64]) -> Result<Vec<f64>> {
        let p = self.inner.operator();
        let mut z = self.inner.apply_transpose(d)?;
        self.shrink.solve_in_place(&mut z);
        p.apply_transpose(&z)
    }

    /// The gain as a dense `n x n` matrix.
    pub fn gain(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut g = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            g.set_column(k, &DVector::from_vec(self.apply_gain(&e)?));
            e[k] = 0.0;
        }
        Ok(g)
    }

    pub fn apply(&self, xbar: &[f64], y0: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if xbar.len() != n || y0.len() != n {
            return Err(shape(format!(
                "expected length {n}, got x {} and y0 {}",
                xbar.len(),
                y0.len()
            )));
        }
        let d: Vec<f64> = xbar.iter().zip(y0).map(|(a, b)| a - b).collect();
        let out = self.apply_gain(&d)?;
        Ok(out.iter().zip(y0).map(|(a, b)| a + b).collect())
    }
}

/// `y0 + Sigma_XY Sigma_X^{-1} (xbar - y0)`.
pub fn conditional_expectation(xbar: &[f64], mu: f64, tau: f64, y0: &[f64]) -> Result<Vec<f64>> {
    if xbar.len() != y0.len() {
        return Err(shape(format!(
            "x has {} entries, y0 has {}",
            xbar.len(),
            y0.len()
        )));
    }
    ConditionalMean::new(mu, tau, xbar.len())?.apply(xbar, y0)
}

/// Log-spaced grid of smoothing levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AlphaGrid {
    pub fn log_spaced(min: f64, max: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(argument("alpha grid is empty"));
        }
        if !(min > 0.0) || !(max >= min) || !max.is_finite() {
            return Err(argument(format!(
                "alpha grid needs 0 < min <= max, got [{min}, {max}]"
            )));
        }
        if points > 1 && max == min {
            return Err(argument("alpha grid with several points needs min < max"));
        }
        Ok(Self { min, max, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = self.log_step();
        (0..self.points)
            .map(|k| {
                if k == 0 {
                    self.min
                } else if k + 1 == self.points {
                    self.max
                } else {
                    (self.min.ln() + k as f64 * step).exp()
                }
            })
            .collect()
    }

    /// Spacing in `ln(alpha)`; `1.0` for a single-point grid.
    pub fn log_step(&self) -> f64 {
        if self.points == 1 {
            1.0
        } else {
            (self.max / self.min).ln() / (self.points - 1) as f64
        }
    }
}

/// Exact mean-square distance `E ||E[Y|X] - F_alpha X||^2` for one component,
/// at each `alpha` in `alphas`.
pub fn risk_curve(mu: f64, tau: f64, n: usize, alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(argument("alpha grid is empty"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0)) {
        return Err(domain(format!(
            "smoothing levels must be positive, got {a}"
        )));
    }
    let cov = component_covariances(mu, tau, n)?;
    let gain = ConditionalMean::new(mu, tau, n)?.gain()?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let smoother = Smoother::new(n, alpha)?;
            let mut f = DMatrix::zeros(n, n);
            let mut e = vec![0.0; n];
            for k in 0..n {
                e[k] = 1.0;
                f.set_column(k, &DVector::from_vec(smoother.apply(&e)?));
                e[k] = 0.0;
            }
            let d = &gain - f;
            Ok((&d * &cov.sigma_x).component_mul(&d).sum())
        })
        .collect()
}

/// Result of the grid search for one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityComponent {
    pub j: usize,
    pub alpha_star: f64,
    pub argmin: f64,
    /// Distance between `argmin` and `alpha_star` in grid steps (log scale).
    pub gap_steps: f64,
    pub passed: bool,
    pub risk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub n: usize,
    pub grid: Vec<f64>,
    pub components: Vec<OptimalityComponent>,
    pub passed: bool,
}

/// Checks that the risk curve of every component is minimized, on the grid,
/// within one step of `mu_j / tau_j`.
pub fn verify_optimality(params: &ModelParams, grid: &AlphaGrid) -> Result<OptimalityReport> {
    params.validate()?;
    let values = grid.values();
    let step = grid.log_step();
    let components = (0..params.components())
        .map(|j| {
            let risk = risk_curve(params.mu[j], params.tau[j], params.n, &values)?;
            let best = risk
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .expect("grid is nonempty");
            let alpha_star = params.mu[j] / params.tau[j];
            let argmin = values[best];
            let gap_steps = (argmin.ln() - alpha_star.ln()).abs() / step;
            Ok(OptimalityComponent {
                j: j + 1,
                alpha_star,
                argmin,
                gap_steps,
                passed: gap_steps <= 1.0,
                risk,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = components.iter().all(|c| c.passed);
    Ok(OptimalityReport {
        n: params.n,
        grid: values,
        components,
        passed,
    })
}

/// Monte Carlo summary for one component at one series length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub j: usize,
    pub mean_mu: f64,
    pub se_mu: f64,
    pub bias_mu: f64,
    pub rmse_mu: f64,
    pub var_mu: f64,
    /// Exact variance of the noise estimator (`None` when `n < 6`).
    pub var_mu_theory: Option<f64>,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub bias_tau: f64,
    pub rmse_tau: f64,
    /// RMSE of the ratio over non-degenerate reps only.
    pub rmse_alpha: Option<f64>,
    pub median_abs_alpha_error: f64,
    pub degenerate_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub n: usize,
    pub reps: usize,
    pub components: Vec<ComponentStats>,
    /// Median over reps of `max_j |alpha_hat_j - alpha_j|`, with degenerate
    /// components filled by the clamping policy.
    pub median_max_alpha_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub lengths: Vec<LengthStats>,
    /// RMSE of both variance estimators non-increasing in `n`, per component.
    pub rmse_monotone: bool,
    /// Median operator-norm error strictly decreasing in `n`.
    pub alpha_error_decreasing: bool,
    pub passed: bool,
}

struct RepEstimate {
    mu: f64,
    tau: f64,
    alpha: f64,
    ok: bool,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64, f64) {
    let r = xs.len() as f64;
    let mean = scalar_hp::compensated_sum(xs.iter().copied()) / r;
    let var = scalar_hp::compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (r - 1.0);
    (mean, (var / r).sqrt(), var)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// One component's raw `(mu_hat, tau_hat, alpha_hat, status)`.
type RawEstimate = (f64, f64, f64, EstimateStatus);

/// Raw per-component estimates for reps `0..reps` at the parameters' `n`.
/// Rows are reps, in order.
fn run_reps(params: &ModelParams, reps: usize, alpha_max: f64) -> Result<Vec<Vec<RawEstimate>>> {
    let sim = Simulator::new(params.clone())?;
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            (0..params.components())
                .map(|j| {
                    let d = sim.draw_component(j, rep);
                    let est = scalar_hp::estimate_from_series(&d.x)?;
                    Ok((
                        est.raw_mu(),
                        est.tau_hat,
                        est.smoothing_alpha(alpha_max),
                        est.status,
                    ))
                })
                .collect()
        })
        .collect()
}

/// Monte Carlo study of the variance and ratio estimators across lengths.
pub fn mc_consistency(
    params: &ModelParams,
    n_list: &[usize],
    reps: usize,
    alpha_max: f64,
) -> Result<ConsistencyReport> {
    if reps < 100 {
        return Err(argument(format!("need at least 100 reps, got {reps}")));
    }
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(argument("n_list must be nonempty and strictly increasing"));
    }
    let alpha_true = params.optimal_alpha();
    let mut lengths = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let p = params.with_n(n)?;
        let rows = run_reps(&p, reps, alpha_max)?;
        let per_rep: Vec<Vec<RepEstimate>> = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|(mu, tau, alpha, status)| RepEstimate {
                        mu,
                        tau,
                        alpha,
                        ok: status == EstimateStatus::Ok,
                    })
                    .collect()
            })
            .collect();
        let components = (0..p.components())
            .map(|j| {
                let mus: Vec<f64> = per_rep.iter().map(|r| r[j].mu).collect();
                let taus: Vec<f64> = per_rep.iter().map(|r| r[j].tau).collect();
                let (mean_mu, se_mu, var_mu) = mean_and_se(&mus);
                let (mean_tau, se_tau, _) = mean_and_se(&taus);
                let rmse = |xs: &[f64], truth: f64| {
                    (xs.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
                };
                let ok_alpha: Vec<f64> = per_rep
                    .iter()
                    .filter(|r| r[j].ok)
                    .map(|r| r[j].alpha)
                    .collect();
                let degenerate = reps - ok_alpha.len();
                ComponentStats {
                    j: j + 1,
                    mean_mu,
                    se_mu,
                    bias_mu: mean_mu - p.mu[j],
                    rmse_mu: rmse(&mus, p.mu[j]),
                    var_mu,
                    var_mu_theory: scalar_hp::mu_estimator_variance(p.mu[j], p.tau[j], n).ok(),
                    mean_tau,
                    se_tau,
                    bias_tau: mean_tau - p.tau[j],
                    rmse_tau: rmse(&taus, p.tau[j]),
                    rmse_alpha: (!ok_alpha.is_empty()).then(|| rmse(&ok_alpha, alpha_true[j])),
                    median_abs_alpha_error: median(
                        per_rep
                            .iter()
                            .map(|r| (r[j].alpha - alpha_true[j]).abs())
                            .collect(),
                    ),
                    degenerate_fraction: degenerate as f64 / reps as f64,
                }
            })
            .collect();
        let max_errors = per_rep
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&alpha_true)
                    .map(|(e, a)| (e.alpha - a).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        lengths.push(LengthStats {
            n,
            reps,
            components,
            median_max_alpha_error: median(max_errors),
        });
    }
    let rmse_monotone = lengths.windows(2).all(|w| {
        w[0].components
            .iter()
            .zip(&w[1].components)
            .all(|(a, b)| b.rmse_mu <= a.rmse_mu && b.rmse_tau <= a.rmse_tau)
    });
    let alpha_error_decreasing = lengths
        .windows(2)
        .all(|w| w[1].median_max_alpha_error < w[0].median_max_alpha_error);
    Ok(ConsistencyReport {
        mu: params.mu.clone(),
        tau: params.tau.clone(),
        lengths,
        rmse_monotone,
        alpha_error_decreasing,
        passed: rmse_monotone && alpha_error_decreasing,
    })
}
