//! Orthonormal bases on `[0, 1]` sampled on a uniform grid.
//!
//! Curves are projected with the trapezoidal rule. For the sine basis
//! `e_j(t) = sqrt(2) sin(j pi t)` the discrete Gram matrix on a uniform grid is
//! the identity up to rounding whenever `J < m - 1`, so projection and
//! reconstruction are exact inverses on band-limited curves.
//!
//! The sine basis vanishes at both endpoints: a curve with nonzero boundary
//! values loses that part of its energy under projection.

use std::sync::Arc;

use crate::error::{argument, shape, Error, Result};

/// Maximum allowed deviation of the discrete Gram matrix from the identity.
pub const GRAM_TOLERANCE: f64 = 1e-6;

const UNIFORM_TOLERANCE: f64 = 1e-9;

/// Uniform sample points `t_k = k / (m - 1)`, `k = 0..m`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    let h = 1.0 / (m as f64 - 1.0);
    (0..m)
        .map(|k| if k + 1 == m { 1.0 } else { k as f64 * h })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Sine,
    UserSuppliedMatrix,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Sine => "sine",
            BasisKind::UserSuppliedMatrix => "user-supplied-matrix",
        })
    }
}

/// A truncated orthonormal basis together with the grid it is sampled on.
#[derive(Debug, Clone)]
pub struct BasisSpec {
    kind: BasisKind,
    truncation: usize,
    grid: Arc<Vec<f64>>,
    weights: Vec<f64>,
    // m x J evaluation matrix, column-major.
    table: Vec<f64>,
}

impl BasisSpec {
    /// Sine basis with `j` functions on the uniform grid of `m` points.
    pub fn sine(j: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(argument(format!("grid needs at least 2 points, got {m}")));
        }
        Self::sine_on_grid(j, uniform_grid(m))
    }

    pub fn sine_on_grid(j: usize, grid: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        check_grid(&grid, j)?;
        let table = (1..=j)
            .flat_map(|jj| grid.iter().map(move |&t| sine_fn(jj, t)))
            .collect::<Vec<_>>();
        debug_assert_eq!(table.len(), m * j);
        Self::finish(BasisKind::Sine, j, grid, table)
    }

    /// Basis given by an `m x J` evaluation matrix (`columns[j][k] = e_j(t_k)`).
    pub fn from_matrix(grid: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let j = columns.len();
        check_grid(&grid, j)?;
        for (idx, col) in columns.iter().enumerate() {
            if col.len() != grid.len() {
                return Err(shape(format!(
                    "basis column {} has {} values, grid has {}",
                    idx + 1,
                    col.len(),
                    grid.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(argument(format!("basis column {} is not finite", idx + 1)));
            }
        }
        let table = columns.into_iter().flatten().collect();
        Self::finish(BasisKind::UserSuppliedMatrix, j, grid, table)
    }

    fn finish(kind: BasisKind, j: usize, grid: Vec<f64>, table: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        let h = 1.0 / (m as f64 - 1.0);
        let mut weights = vec![h; m];
        weights[0] = 0.5 * h;
        weights[m - 1] = 0.5 * h;
        let spec = Self {
            kind,
            truncation: j,
            grid: Arc::new(grid),
            weights,
            table,
        };
        let dev = spec.gram_deviation();
        if !(dev <= GRAM_TOLERANCE) {
            return Err(argument(format!(
                "basis is not orthonormal on this grid: max |G - I| = {dev:e}"
            )));
        }
        Ok(spec)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Truncation level `J`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn grid(&self) -> &Arc<Vec<f64>> {
        &self.grid
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples of `e_j` on the grid (`j` is 1-based).
    pub fn column(&self, j: usize) -> Result<&[f64]> {
        self.check_index(j)?;
        let m = self.grid_len();
        Ok(&self.table[(j - 1) * m..j * m])
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.truncation {
            return Err(Error::Index {
                index: j,
                len: self.truncation,
            });
        }
        Ok(())
    }

    /// Discrete Gram matrix `G[a][b] = sum_k w_k e_a(t_k) e_b(t_k)`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let m = self.grid_len();
        let col = |j: usize| &self.table[j * m..(j + 1) * m];
        (0..self.truncation)
            .map(|a| {
                (0..self.truncation)
                    .map(|b| self.quad(col(a), col(b)))
                    .collect()
            })
            .collect()
    }

    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0_f64;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        if g.iter().flatten().any(|v| v.is_nan()) {
            return f64::NAN;
        }
        worst
    }

    fn quad(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Quadrature approximation of `||f||^2`.
    pub fn norm_sq(&self, values: &[f64]) -> f64 {
        self.quad(values, values)
    }

    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        self.check_index(j)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(argument(format!("t = {t} outside [0, 1]")));
        }
        match self.kind {
            BasisKind::Sine => Ok(sine_fn(j, t)),
            BasisKind::UserSuppliedMatrix => {
                let col = self.column(j)?;
                let grid = &self.grid;
                let k = grid.partition_point(|&g| g <= t).clamp(1, grid.len() - 1);
                let (t0, t1) = (grid[k - 1], grid[k]);
                let s = (t - t0) / (t1 - t0);
                Ok(col[k - 1] + s * (col[k] - col[k - 1]))
            }
        }
    }

    pub fn project(&self, curve: &SampledCurve) -> Result<Vec<f64>> {
        self.check_curve(curve)?;
        Ok(self.project_values(&curve.values))
    }

    fn project_values(&self, values: &[f64]) -> Vec<f64> {
        let m = self.grid_len();
        (0..self.truncation)
            .map(|j| self.quad(values, &self.table[j * m..(j + 1) * m]))
            .collect()
    }

    fn check_curve(&self, curve: &SampledCurve) -> Result<()> {
        if !Arc::ptr_eq(&curve.grid, &self.grid) && *curve.grid != *self.grid {
            return Err(shape("curve grid differs from basis grid"));
        }
        Ok(())
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<SampledCurve> {
        if coeffs.len() != self.truncation {
            return Err(shape(format!(
                "expected {} coefficients, got {}",
                self.truncation,
                coeffs.len()
            )));
        }
        let m = self.grid_len();
        let mut values = vec![0.0; m];
        for (j, c) in coeffs.iter().enumerate() {
            for (v, e) in values.iter_mut().zip(&self.table[j * m..(j + 1) * m]) {
                *v += c * e;
            }
        }
        Ok(SampledCurve {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    pub fn project_series(&self, curves: &[SampledCurve]) -> Result<CoefficientMatrix> {
        if curves.is_empty() {
            return Err(argument("cannot project an empty series"));
        }
        let mut out = CoefficientMatrix::zeros(curves.len(), self.truncation);
        for (i, curve) in curves.iter().enumerate() {
            self.check_curve(curve)
                .map_err(|_| shape(format!("curve {} grid differs from basis grid", i + 1)))?;
            for (j, c) in self.project_values(&curve.values).into_iter().enumerate() {
                out.set(i, j, c);
            }
        }
        Ok(out)
    }

    /// Reconstructs every row of a coefficient matrix.
    pub fn reconstruct_series(&self, coeffs: &CoefficientMatrix) -> Result<Vec<SampledCurve>> {
        (0..coeffs.rows())
            .map(|i| self.reconstruct(&coeffs.row(i)))
            .collect()
    }

    pub fn curve(&self, values: Vec<f64>) -> Result<SampledCurve> {
        SampledCurve::new(Arc::clone(&self.grid), values)
    }
}

/// Smallest truncation (up to `max_j`) whose sine-basis coefficients retain
/// at least `fraction` of the mean curve energy. Returns `max_j` when no
/// smaller truncation reaches the target.
pub fn select_truncation(curves: &[SampledCurve], max_j: usize, fraction: f64) -> Result<usize> {
    let first = curves
        .first()
        .ok_or_else(|| argument("cannot select a truncation for an empty series"))?;
    let spec = BasisSpec::sine_on_grid(max_j, first.grid.to_vec())?;
    let coeffs = spec.project_series(curves)?;
    let total: f64 = curves.iter().map(|c| spec.norm_sq(&c.values)).sum();
    if total <= 0.0 {
        return Ok(1);
    }
    let mut captured = 0.0;
    for j in 0..max_j {
        captured += coeffs.column(j).iter().map(|c| c * c).sum::<f64>();
        if captured >= fraction * total {
            return Ok(j + 1);
        }
    }
    Ok(max_j)
}

fn sine_fn(j: usize, t: f64) -> f64 {
    std::f64::consts::SQRT_2 * (j as f64 * std::f64::consts::PI * t).sin()
}

fn check_grid(grid: &[f64], j: usize) -> Result<()> {
    let m = grid.len();
    if j == 0 {
        return Err(argument("truncation J must be >= 1"));
    }
    if m < 2 * j {
        return Err(argument(format!(
            "grid of {m} points cannot resolve J = {j} basis functions (need m >= 2J)"
        )));
    }
    let expect = uniform_grid(m);
    for (k, (t, e)) in grid.iter().zip(&expect).enumerate() {
        if !((t - e).abs() <= UNIFORM_TOLERANCE) {
            return Err(argument(format!(
                "grid point {} = {t} is not on the uniform grid of [0, 1] (expected {e})",
                k + 1
            )));
        }
    }
    Ok(())
}

/// One functional observation sampled on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub grid: Arc<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(grid: Arc<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(shape(format!(
                "curve has {} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(argument(format!("curve value {} is not finite", k + 1)));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(grid: Arc<Vec<f64>>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }
}

/// `n x J` matrix of basis coefficients; column `j` is the scalar series of
/// component `j`. Stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != rows) {
            return Err(shape(format!("column {} has a different length", j + 1)));
        }
        let data: Vec<f64> = columns.into_iter().flatten().collect();
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(argument(format!(
                "non-finite coefficient at row {}, column {}",
                k % rows.max(1) + 1,
                k / rows.max(1) + 1
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(shape(format!(
                    "row {} has {} entries, expected {cols}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(argument(format!(
                        "non-finite coefficient at row {}, column {}",
                        i + 1,
                        j + 1
                    )));
                }
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Number of curves `n`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Truncation `J`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cols).map(move |j| self.column(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eval_sine_examples() {
        let spec = BasisSpec::sine(4, 64).unwrap();
        assert!(close(
            spec.eval(1, 0.5).unwrap(),
            std::f64::consts::SQRT_2,
            1e-15
        ));
        assert!(close(spec.eval(2, 0.5).unwrap(), 0.0, 1e-15));
        assert!(close(
            spec.eval(3, 1.0 / 6.0).unwrap(),
            std::f64::consts::SQRT_2,
            1e-14
        ));
        assert!(matches!(spec.eval(0, 0.3), Err(Error::Index { .. })));
        assert!(matches!(spec.eval(5, 0.3), Err(Error::Index { .. })));
    }

    #[test]
    fn user_matrix_interpolates() {
        let sine = BasisSpec::sine(3, 200).unwrap();
        let cols = (1..=3).map(|j| sine.column(j).unwrap().to_vec()).collect();
        let user = BasisSpec::from_matrix(sine.grid().to_vec(), cols).unwrap();
        assert_eq!(user.kind(), BasisKind::UserSuppliedMatrix);
        for t in [0.0, 0.1234, 0.5, 0.77, 1.0] {
            let a = user.eval(2, t).unwrap();
            let b = sine.eval(2, t).unwrap();
            // Linear interpolation error bound h^2/8 * max|e''| ~ 1e-3 here.
            assert!(close(a, b, 2e-3), "t = {t}");
        }
        // Exact on grid points.
        let t = user.grid()[37];
        assert_eq!(user.eval(1, t).unwrap(), sine.column(1).unwrap()[37]);
    }

    #[test]
    fn user_matrix_must_be_orthonormal() {
        let grid = uniform_grid(20);
        let ones = vec![vec![1.0; 20], vec![1.0; 20]];
        assert!(BasisSpec::from_matrix(grid, ones).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(BasisSpec::sine(0, 10).is_err());
        assert!(BasisSpec::sine(6, 11).is_err());
        let mut g = uniform_grid(16);
        g[3] += 0.01;
        assert!(BasisSpec::sine_on_grid(4, g).is_err());
    }

    #[test]
    fn gram_is_identity_at_mandated_density() {
        for m in [2048, 4096] {
            let spec = BasisSpec::sine(32, m).unwrap();
            assert!(spec.gram_deviation() <= 1e-6);
        }
    }

    #[test]
    fn project_examples() {
        let spec = BasisSpec::sine(6, 1024).unwrap();
        let curve = SampledCurve::from_fn(spec.grid().clone(), |t| {
            std::f64::consts::SQRT_2 * (std::f64::consts::PI * t).sin()
        })
        .unwrap();
        let c = spec.project(&curve).unwrap();
        assert!(close(c[0], 1.0, 1e-6));
        assert!(c[1..].iter().all(|v| v.abs() <= 1e-6));

        let zero = spec.curve(vec![0.0; 1024]).unwrap();
        assert_eq!(spec.project(&zero).unwrap(), vec![0.0; 6]);

        let other = BasisSpec::sine(6, 1000).unwrap();
        let wrong = other.curve(vec![0.0; 1000]).unwrap();
        assert!(matches!(spec.project(&wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn project_two_mode_curve_matches_fine_quadrature() {
        // Oracle: composite Simpson integration at 10^5 intervals.
        let f = |t: f64| 3.0 * sine_fn(2, t) - 0.5 * sine_fn(5, t);
        let fine = 100_000;
        let h = 1.0 / fine as f64;
        let oracle: Vec<f64> = (1..=8)
            .map(|j| {
                let g = |t: f64| f(t) * sine_fn(j, t);
                let mut s = g(0.0) + g(1.0);
                for k in 1..fine {
                    s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
                }
                s * h / 3.0
            })
            .collect();
        let expected = [0.0, 3.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0];
        for (o, e) in oracle.iter().zip(&expected) {
            assert!(close(*o, *e, 1e-9));
        }
        let spec = BasisSpec::sine(8, 2048).unwrap();
        let c = spec
            .project(&SampledCurve::from_fn(spec.grid().clone(), f).unwrap())
            .unwrap();
        for (a, o) in c.iter().zip(&oracle) {
            assert!(close(*a, *o, 1e-6));
        }
    }

    #[test]
    fn reconstruct_examples() {
        let spec = BasisSpec::sine(8, 2048).unwrap();
        assert!(spec
            .reconstruct(&[0.0; 8])
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        assert!(matches!(spec.reconstruct(&[1.0; 3]), Err(Error::Shape(_))));

        let e3 = spec.curve(spec.column(3).unwrap().to_vec()).unwrap();
        let back = spec.reconstruct(&spec.project(&e3).unwrap()).unwrap();
        for (a, b) in back.values.iter().zip(&e3.values) {
            assert!(close(*a, *b, 1e-6));
        }
    }

    #[test]
    fn project_series_examples() {
        let spec = BasisSpec::sine(5, 64).unwrap();
        assert!(matches!(spec.project_series(&[]), Err(Error::Argument(_))));

        let one = spec
            .curve(spec.grid().iter().map(|t| t * (1.0 - t)).collect())
            .unwrap();
        let m = spec.project_series(std::slice::from_ref(&one)).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 5));
        assert_eq!(m.row(0), spec.project(&one).unwrap());

        let zero = spec.curve(vec![0.0; 64]).unwrap();
        let m = spec.project_series(&vec![zero; 3]).unwrap();
        assert_eq!(m, CoefficientMatrix::zeros(3, 5));

        let curves: Vec<_> = (0..5)
            .map(|i| {
                let c: Vec<f64> = (0..5).map(|j| (i * 5 + j) as f64 * 0.1 - 1.0).collect();
                spec.reconstruct(&c).unwrap()
            })
            .collect();
        let m = spec.project_series(&curves).unwrap();
        for (i, c) in curves.iter().enumerate() {
            assert_eq!(m.row(i), spec.project(c).unwrap());
        }
    }

    #[test]
    fn truncation_selection() {
        let spec = BasisSpec::sine(8, 512).unwrap();
        let curves: Vec<_> = (0..4)
            .map(|i| {
                let mut c = vec![0.0; 8];
                c[0] = 1.0 + i as f64;
                c[2] = 0.5;
                c[6] = 0.01;
                spec.reconstruct(&c).unwrap()
            })
            .collect();
        assert_eq!(select_truncation(&curves, 16, 0.995).unwrap(), 3);
        assert_eq!(select_truncation(&curves, 16, 1.0 - 1e-12).unwrap(), 7);
        assert!(select_truncation(&[], 4, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_on_band_limited_curves(c in prop::collection::vec(-3.5f64..3.5, 8)) {
            let spec = BasisSpec::sine(8, 2048).unwrap();
            let curve = spec.reconstruct(&c).unwrap();
            let back = spec.project(&curve).unwrap();
            for (a, b) in back.iter().zip(&c) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
            // Parseval at truncation.
            let energy: f64 = c.iter().map(|v| v * v).sum();
            let quad = spec.norm_sq(&curve.values);
            prop_assert!((quad - energy).abs() <= 1e-6 * energy.max(1e-12));
        }
    }
}
