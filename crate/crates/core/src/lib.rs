//! Functional Hodrick-Prescott filtering.
//!
//! A functional time series `X_1, ..., X_n` of curves on `[0, 1]` is projected
//! onto a truncated orthonormal basis. Each basis component is then an
//! ordinary scalar series, smoothed by the HP filter with its own level
//! `alpha_j`. The levels form a diagonal smoothing operator `B`; the optimal
//! choice is the noise-to-signal operator `Sigma_u Sigma_v^{-1}`, which
//! [`functional_hp::estimate_b`] estimates from the second differences of the
//! data.
//!
//! Modules:
//! - [`basis`]: sampling grids, projection and reconstruction.
//! - [`diffop`]: the second-difference operator and banded solvers.
//! - [`scalar_hp`]: scalar filter and variance estimators.
//! - [`functional_hp`]: diagonal operators, the functional filter, estimation.
//! - [`model_sim`]: ground-truth simulation, exact risk curves, Monte Carlo drivers.
//! - [`io`], [`cli`]: file formats and the command-line front end.

// NaN-rejecting checks are written as `!(x >= 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod diffop;
mod error;
pub mod functional_hp;
pub mod io;
pub mod model_sim;
pub mod rng;
pub mod scalar_hp;

pub use basis::{BasisKind, BasisSpec, CoefficientMatrix, SampledCurve};
pub use error::{Error, Result};
pub use functional_hp::{DiagonalOperator, Estimation, EstimationReport, FilterResult};
pub use model_sim::{AlphaGrid, ModelParams, Simulation, Simulator};
pub use scalar_hp::{EstimateStatus, ScalarEstimate};
