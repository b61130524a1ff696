//! Functional HP filtering on a truncated basis.
//!
//! Every operator here is diagonal in the configured basis, so filtering and
//! estimation decompose into independent scalar problems, one per basis
//! component. Components run in parallel; results are collected in index
//! order, so outputs never depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, CoefficientMatrix};
use crate::diffop::{self, Smoother};
use crate::error::{argument, domain, shape, Result};
use crate::scalar_hp::{self, EstimateStatus, ScalarEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorLabel {
    SigmaU,
    SigmaV,
    B,
    Generic,
}

/// An operator diagonal in the basis, given by its eigenvalue per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalOperator {
    pub eigenvalues: Vec<f64>,
    pub label: OperatorLabel,
}

/// Partial-trace summary of a covariance eigenvalue sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnostic {
    pub trace: f64,
    /// `eigenvalue_J / eigenvalue_1`.
    pub tail_ratio: f64,
}

impl DiagonalOperator {
    /// Noise covariance; eigenvalues must be strictly positive.
    pub fn sigma_u(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::positive(eigenvalues, OperatorLabel::SigmaU)
    }

    /// Signal covariance; eigenvalues must be strictly positive.
    pub fn sigma_v(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::positive(eigenvalues, OperatorLabel::SigmaV)
    }

    /// Smoothing operator; eigenvalues must be nonnegative.
    pub fn smoothing(eigenvalues: Vec<f64>) -> Result<Self> {
        check_finite(&eigenvalues)?;
        if let Some(j) = eigenvalues.iter().position(|a| !(*a >= 0.0)) {
            return Err(domain(format!(
                "smoothing operator violates the positivity condition <h, Bh> >= 0: \
                 eigenvalue {} = {}",
                j + 1,
                eigenvalues[j]
            )));
        }
        Ok(Self {
            eigenvalues,
            label: OperatorLabel::B,
        })
    }

    pub fn generic(eigenvalues: Vec<f64>) -> Result<Self> {
        check_finite(&eigenvalues)?;
        Ok(Self {
            eigenvalues,
            label: OperatorLabel::Generic,
        })
    }

    /// Identity-scaled operator `value * I` on `j` components.
    pub fn constant(j: usize, value: f64) -> Result<Self> {
        Self::smoothing(vec![value; j])
    }

    fn positive(eigenvalues: Vec<f64>, label: OperatorLabel) -> Result<Self> {
        check_finite(&eigenvalues)?;
        if eigenvalues.is_empty() {
            return Err(argument("operator needs at least one component"));
        }
        if let Some(j) = eigenvalues.iter().position(|v| !(*v > 0.0)) {
            return Err(domain(format!(
                "covariance eigenvalue {} = {} is not positive",
                j + 1,
                eigenvalues[j]
            )));
        }
        Ok(Self { eigenvalues, label })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len() {
            return Err(shape(format!(
                "operator has {} components, vector has {}",
                self.len(),
                coeffs.len()
            )));
        }
        Ok(self
            .eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(a, c)| a * c)
            .collect())
    }

    /// `<h, Oh>`.
    pub fn quadratic_form(&self, h: &[f64]) -> Result<f64> {
        Ok(diffop::dot(&self.apply(h)?, h))
    }

    pub fn trace_diagnostic(&self) -> TraceDiagnostic {
        let trace = scalar_hp::compensated_sum(self.eigenvalues.iter().copied());
        let tail_ratio = match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(&first), Some(&last)) if first != 0.0 => last / first,
            _ => f64::NAN,
        };
        TraceDiagnostic { trace, tail_ratio }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(j) => Err(argument(format!("eigenvalue {} is not finite", j + 1))),
        None => Ok(()),
    }
}

/// Output of the functional filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub trend: CoefficientMatrix,
    pub residual: CoefficientMatrix,
    /// Smoothing level actually applied to each component.
    pub per_component_alpha: Vec<f64>,
    pub component_status: Vec<EstimateStatus>,
}

/// Component-wise `(I + B P'P)^{-1} X`.
pub fn filter(x: &CoefficientMatrix, b: &DiagonalOperator) -> Result<FilterResult> {
    filter_with_status(x, b, vec![EstimateStatus::Ok; b.len()])
}

fn filter_with_status(
    x: &CoefficientMatrix,
    b: &DiagonalOperator,
    component_status: Vec<EstimateStatus>,
) -> Result<FilterResult> {
    if b.len() != x.cols() {
        return Err(shape(format!(
            "operator has {} components, data has {}",
            b.len(),
            x.cols()
        )));
    }
    if let Some(j) = b.eigenvalues.iter().position(|a| !(*a >= 0.0)) {
        return Err(domain(format!(
            "smoothing operator violates the positivity condition: eigenvalue {} = {}",
            j + 1,
            b.eigenvalues[j]
        )));
    }
    let n = x.rows();
    let columns = b
        .eigenvalues
        .par_iter()
        .enumerate()
        .map(|(j, &alpha)| Smoother::new(n, alpha)?.apply(x.column(j)))
        .collect::<Result<Vec<_>>>()?;
    let trend = CoefficientMatrix::from_columns(columns)?;
    let residual = x.sub(&trend)?;
    Ok(FilterResult {
        trend,
        residual,
        per_component_alpha: b.eigenvalues.clone(),
        component_status,
    })
}

/// Estimates the smoothing operator from the data and filters with it.
/// Components with a degenerate signal estimate are smoothed with `alpha_max`.
pub fn filter_estimated(
    x: &CoefficientMatrix,
    alpha_max: f64,
) -> Result<(FilterResult, Estimation)> {
    let est = estimate_b(x)?;
    let alphas = est
        .estimates
        .iter()
        .map(|e| e.smoothing_alpha(alpha_max))
        .collect();
    let b = DiagonalOperator::smoothing(alphas)?;
    let status = est.estimates.iter().map(|e| e.status).collect();
    Ok((filter_with_status(x, &b, status)?, est))
}

/// `sum_i ||X_i - Y_i||^2 + sum_j alpha_j ||P Y^j||^2`.
pub fn functional_objective(
    x: &CoefficientMatrix,
    y: &CoefficientMatrix,
    b: &DiagonalOperator,
) -> Result<f64> {
    if x.rows() != y.rows() || x.cols() != y.cols() || b.len() != x.cols() {
        return Err(shape(format!(
            "X is {}x{}, Y is {}x{}, operator has {} components",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols(),
            b.len()
        )));
    }
    let mut total = 0.0;
    for (j, alpha) in b.eigenvalues.iter().enumerate() {
        total += scalar_hp::hp_objective(x.column(j), y.column(j), *alpha)?;
    }
    Ok(total)
}

/// `Sigma_u Sigma_v^{-1}`, the noise-to-signal operator.
pub fn optimal_b(
    sigma_u: &DiagonalOperator,
    sigma_v: &DiagonalOperator,
) -> Result<DiagonalOperator> {
    if sigma_u.label != OperatorLabel::SigmaU || sigma_v.label != OperatorLabel::SigmaV {
        return Err(argument(format!(
            "expected (sigma_u, sigma_v), got ({:?}, {:?})",
            sigma_u.label, sigma_v.label
        )));
    }
    if sigma_u.len() != sigma_v.len() {
        return Err(shape(format!(
            "sigma_u has {} components, sigma_v has {}",
            sigma_u.len(),
            sigma_v.len()
        )));
    }
    if let Some(j) = sigma_v.eigenvalues.iter().position(|t| !(*t > 0.0)) {
        return Err(domain(format!(
            "sigma_v eigenvalue {} = {} is not positive",
            j + 1,
            sigma_v.eigenvalues[j]
        )));
    }
    DiagonalOperator::smoothing(
        sigma_u
            .eigenvalues
            .iter()
            .zip(&sigma_v.eigenvalues)
            .map(|(m, t)| m / t)
            .collect(),
    )
}

/// Per-component estimates together with the operator they define.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub operator: DiagonalOperator,
    pub estimates: Vec<ScalarEstimate>,
}

impl Estimation {
    pub fn statuses(&self) -> Vec<EstimateStatus> {
        self.estimates.iter().map(|e| e.status).collect()
    }

    pub fn all_degenerate(&self) -> bool {
        self.estimates
            .iter()
            .all(|e| e.status != EstimateStatus::Ok)
    }

    pub fn report(&self, basis_kind: BasisKind) -> EstimationReport {
        let first = self.estimates.first();
        EstimationReport {
            n: first.map_or(0, |e| e.n),
            j: self.estimates.len(),
            basis_kind,
            components: self
                .estimates
                .iter()
                .enumerate()
                .map(|(j, e)| ComponentReport {
                    j: j + 1,
                    mu_hat: e.mu_hat,
                    tau_hat: e.tau_hat,
                    alpha_hat: e.alpha_hat,
                    status: e.status,
                    s0: e.s0,
                    s1: e.s1,
                })
                .collect(),
        }
    }
}

fn estimate_columns(x: &CoefficientMatrix) -> Result<Vec<ScalarEstimate>> {
    if x.rows() < scalar_hp::MIN_ESTIMATION_LEN {
        return Err(argument(format!(
            "estimation needs at least {} curves, got {}",
            scalar_hp::MIN_ESTIMATION_LEN,
            x.rows()
        )));
    }
    (0..x.cols())
        .into_par_iter()
        .map(|j| scalar_hp::estimate_from_series(x.column(j)))
        .collect()
}

/// Estimated noise covariance (negative raw estimates clamped to zero).
pub fn estimate_sigma_u(x: &CoefficientMatrix) -> Result<(DiagonalOperator, Vec<EstimateStatus>)> {
    let est = estimate_columns(x)?;
    let op = DiagonalOperator {
        eigenvalues: est.iter().map(|e| e.mu_hat).collect(),
        label: OperatorLabel::SigmaU,
    };
    Ok((op, est.iter().map(|e| e.status).collect()))
}

/// Estimated signal covariance (negative raw estimates clamped to zero).
pub fn estimate_sigma_v(x: &CoefficientMatrix) -> Result<(DiagonalOperator, Vec<EstimateStatus>)> {
    let est = estimate_columns(x)?;
    let op = DiagonalOperator {
        eigenvalues: est.iter().map(|e| e.tau_hat.max(0.0)).collect(),
        label: OperatorLabel::SigmaV,
    };
    Ok((op, est.iter().map(|e| e.status).collect()))
}

/// Data-driven smoothing operator. Degenerate components keep their status;
/// a `TauDegenerate` component has eigenvalue `NaN` here and must be filled
/// (see [`filter_estimated`]) before filtering.
pub fn estimate_b(x: &CoefficientMatrix) -> Result<Estimation> {
    let estimates = estimate_columns(x)?;
    let operator = DiagonalOperator {
        eigenvalues: estimates
            .iter()
            .map(|e| e.alpha_hat.unwrap_or(f64::NAN))
            .collect(),
        label: OperatorLabel::B,
    };
    Ok(Estimation {
        operator,
        estimates,
    })
}

/// Per-component entry of an [`EstimationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub j: usize,
    pub mu_hat: f64,
    pub tau_hat: f64,
    pub alpha_hat: Option<f64>,
    pub status: EstimateStatus,
    pub s0: f64,
    pub s1: f64,
}

/// Serializable summary of an estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub basis_kind: BasisKind,
    pub components: Vec<ComponentReport>,
}
