//! The second-difference operator `P` and the banded linear algebra built on it.
//!
//! `P` maps a length-`n` series to its `n - 2` second differences,
//! `(Py)[m] = y[m+2] - 2 y[m+1] + y[m]`. Its kernel is the affine sequences.
//! Every system solved here (`I + alpha P'P` and `P P'`) is symmetric positive
//! definite with two off-diagonals, so a banded Cholesky factorization handles
//! all of them in `O(n)` time and memory.

use crate::error::{argument, domain, shape, Result};

const STENCIL: [f64; 3] = [1.0, -2.0, 1.0];

/// Second-difference operator for series of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecondDifference {
    n: usize,
}

impl SecondDifference {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(argument(format!(
                "second difference needs a series of length >= 3, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Length of the input series.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the differenced series, `n - 2`.
    pub fn output_len(&self) -> usize {
        self.n - 2
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(shape(format!(
                "expected length {}, got {}",
                self.n,
                y.len()
            )));
        }
        Ok(y.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
    }

    /// Applies `P'`, mapping `n - 2` values back to length `n`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n - 2 {
            return Err(shape(format!(
                "expected length {}, got {}",
                self.n - 2,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.n];
        for (m, &vm) in v.iter().enumerate() {
            for (k, s) in STENCIL.iter().enumerate() {
                out[m + k] += s * vm;
            }
        }
        Ok(out)
    }

    /// `P'P` as a symmetric pentadiagonal matrix.
    pub fn gram(&self) -> SymPentadiagonal {
        let n = self.n;
        let mut band = SymPentadiagonal::zeros(n);
        // Each row of P contributes the outer product of the stencil.
        for m in 0..n - 2 {
            for a in 0..3 {
                band.diag[m + a] += STENCIL[a] * STENCIL[a];
                if a + 1 < 3 {
                    band.off1[m + a] += STENCIL[a] * STENCIL[a + 1];
                }
                if a + 2 < 3 {
                    band.off2[m + a] += STENCIL[a] * STENCIL[a + 2];
                }
            }
        }
        band
    }

    /// `P P'`, an `(n-2) x (n-2)` pentadiagonal matrix with rows `(1, -4, 6, -4, 1)`.
    pub fn outer_gram(&self) -> SymPentadiagonal {
        let k = self.n - 2;
        SymPentadiagonal {
            diag: vec![6.0; k],
            off1: vec![-4.0; k.saturating_sub(1)],
            off2: vec![1.0; k.saturating_sub(2)],
        }
    }
}

/// Symmetric matrix with bandwidth two, stored by diagonals.
///
/// `off1[i]` holds entry `(i, i+1)` and `off2[i]` holds entry `(i, i+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPentadiagonal {
    pub diag: Vec<f64>,
    pub off1: Vec<f64>,
    pub off2: Vec<f64>,
}

impl SymPentadiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off1: vec![0.0; n.saturating_sub(1)],
            off2: vec![0.0; n.saturating_sub(2)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        match hi - lo {
            0 => self.diag[lo],
            1 => self.off1[lo],
            2 => self.off2[lo],
            _ => 0.0,
        }
    }

    /// Returns `I + alpha * self`.
    pub fn shifted_identity(&self, alpha: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| 1.0 + alpha * d).collect(),
            off1: self.off1.iter().map(|d| alpha * d).collect(),
            off2: self.off2.iter().map(|d| alpha * d).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            out[i] += self.off1[i] * x[i + 1];
            out[i + 1] += self.off1[i] * x[i];
        }
        for i in 0..n.saturating_sub(2) {
            out[i] += self.off2[i] * x[i + 2];
            out[i + 2] += self.off2[i] * x[i];
        }
        out
    }
}

/// Banded Cholesky factor `L` (lower, bandwidth two) of a [`SymPentadiagonal`].
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l0: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SymPentadiagonal) -> Result<Self> {
        let n = a.dim();
        let mut l0 = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            if i >= 2 {
                l2[i] = a.off2[i - 2] / l0[i - 2];
            }
            if i >= 1 {
                l1[i] = (a.off1[i - 1] - l2[i] * l1[i - 1]) / l0[i - 1];
            }
            let d = a.diag[i] - l1[i] * l1[i] - l2[i] * l2[i];
            if !(d > 0.0) {
                return Err(domain(format!(
                    "matrix is not positive definite (pivot {i} = {d})"
                )));
            }
            l0[i] = d.sqrt();
        }
        Ok(Self { l0, l1, l2 })
    }

    pub fn dim(&self) -> usize {
        self.l0.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            if i >= 1 {
                s -= self.l1[i] * b[i - 1];
            }
            if i >= 2 {
                s -= self.l2[i] * b[i - 2];
            }
            b[i] = s / self.l0[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.l1[i + 1] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.l2[i + 2] * b[i + 2];
            }
            b[i] = s / self.l0[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(shape(format!(
                "expected length {}, got {}",
                self.dim(),
                b.len()
            )));
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// The HP smoother `F_alpha = (I + alpha P'P)^{-1}` for a fixed length and
/// smoothing level, factored once and reusable across series.
///
/// For `alpha <= 1` the system `I + alpha P'P` is factored directly. Above
/// that the equivalent form `x - P'(I/alpha + PP')^{-1} P x` is used: its
/// correction term vanishes on affine inputs, so the kernel of `P` stays a
/// fixed point to rounding accuracy even for very large `alpha`.
#[derive(Debug, Clone)]
pub struct Smoother {
    op: SecondDifference,
    alpha: f64,
    factor: SmootherFactor,
}

#[derive(Debug, Clone)]
enum SmootherFactor {
    Identity,
    Direct(BandedCholesky),
    Dual(BandedCholesky),
}

/// Smoothing level above which [`Smoother`] switches to the dual form.
pub const DUAL_FORM_THRESHOLD: f64 = 1.0;

impl Smoother {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        let op = SecondDifference::new(n)?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(domain(format!(
                "smoothing parameter must be finite and >= 0, got {alpha}"
            )));
        }
        let factor = if alpha == 0.0 {
            SmootherFactor::Identity
        } else if alpha <= DUAL_FORM_THRESHOLD {
            SmootherFactor::Direct(BandedCholesky::factor(&op.gram().shifted_identity(alpha))?)
        } else {
            let mut dual = op.outer_gram();
            dual.diag.iter_mut().for_each(|d| *d += 1.0 / alpha);
            SmootherFactor::Dual(BandedCholesky::factor(&dual)?)
        };
        Ok(Self { op, alpha, factor })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(shape(format!(
                "expected length {}, got {}",
                self.len(),
                x.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(argument(format!(
                "non-finite input at position {}",
                pos + 1
            )));
        }
        match &self.factor {
            SmootherFactor::Identity => Ok(x.to_vec()),
            SmootherFactor::Direct(f) => {
                let mut y = x.to_vec();
                f.solve_in_place(&mut y);
                Ok(y)
            }
            SmootherFactor::Dual(f) => {
                let mut z = self.op.apply(x)?;
                f.solve_in_place(&mut z);
                let corr = self.op.apply_transpose(&z)?;
                Ok(x.iter().zip(corr).map(|(a, c)| a - c).collect())
            }
        }
    }
}

/// Minimum-norm right inverse `P^+ = P'(PP')^{-1}`.
///
/// `PP'` is too ill-conditioned to factor for long series (its smallest
/// eigenvalue decays like `n^-4`), so `P^+ v` is built as a particular
/// solution of `Py = v` from two cumulative sums, with its component in
/// `ker P` projected out. Both steps are exact and `O(n)`.
#[derive(Debug, Clone)]
pub struct RightInverse {
    op: SecondDifference,
    kernel: KernelBasis,
}

impl RightInverse {
    pub fn new(n: usize) -> Result<Self> {
        let op = SecondDifference::new(n)?;
        let kernel = kernel_z(n)?;
        Ok(Self { op, kernel })
    }

    /// `P^+ v` for `v` of length `n - 2`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len(), self.op.output_len())?;
        let n = self.op.len();
        // Particular solution with y_0 = y_1 = 0.
        let mut y = vec![0.0; n];
        let (mut slope, mut level) = (0.0, 0.0);
        for (k, vk) in v.iter().enumerate() {
            slope += vk;
            level += slope;
            y[k + 2] = level;
        }
        Ok(self.kernel.remove(&y))
    }

    /// `(P^+)' w = (PP')^{-1} P w` for `w` of length `n`.
    pub fn apply_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check(w.len(), self.op.len())?;
        let w = self.kernel.remove(w);
        // Transpose of the double cumulative sum in `apply`.
        let k = self.op.output_len();
        let mut out = vec![0.0; k];
        let (mut tail, mut acc) = (0.0, 0.0);
        for i in (0..k).rev() {
            tail += w[i + 2];
            acc += tail;
            out[i] = acc;
        }
        Ok(out)
    }

    /// Solves `(PP') z = v`, using `(PP')^{-1} = (P^+)' P^+`.
    pub fn solve_outer(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply_transpose(&self.apply(v)?)
    }

    pub fn operator(&self) -> SecondDifference {
        self.op
    }

    fn check(&self, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(shape(format!("expected length {expected}, got {got}")));
        }
        Ok(())
    }
}

/// Orthonormal `n x 2` basis of `ker P`, stored as two columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub columns: [Vec<f64>; 2],
}

impl KernelBasis {
    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    /// `Z gamma`.
    pub fn combine(&self, gamma: [f64; 2]) -> Vec<f64> {
        self.columns[0]
            .iter()
            .zip(&self.columns[1])
            .map(|(a, b)| gamma[0] * a + gamma[1] * b)
            .collect()
    }

    /// `Z' y`.
    pub fn coordinates(&self, y: &[f64]) -> [f64; 2] {
        [dot(&self.columns[0], y), dot(&self.columns[1], y)]
    }

    /// `Z Z' y`, the orthogonal projection onto the affine sequences.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.combine(self.coordinates(y))
    }
}

impl KernelBasis {
    /// `(I - ZZ') y`, projected twice so that rounding in large `y` leaves
    /// no kernel component behind.
    fn remove(&self, y: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for _ in 0..2 {
            let proj = self.project(&r);
            r.iter_mut().zip(proj).for_each(|(a, b)| *a -= b);
        }
        r
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn apply_p(y: &[f64]) -> Result<Vec<f64>> {
    SecondDifference::new(y.len())?.apply(y)
}

pub fn apply_pt(v: &[f64]) -> Result<Vec<f64>> {
    SecondDifference::new(v.len() + 2)?.apply_transpose(v)
}

pub fn gram_ptp(n: usize) -> Result<SymPentadiagonal> {
    Ok(SecondDifference::new(n)?.gram())
}

/// Gram-Schmidt on `(1, ..., 1)` and `(1, 2, ..., n)`.
pub fn kernel_z(n: usize) -> Result<KernelBasis> {
    SecondDifference::new(n)?;
    let nf = n as f64;
    let q1 = vec![1.0 / nf.sqrt(); n];
    let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let c = dot(&q1, &t);
    let mut q2: Vec<f64> = t.iter().zip(&q1).map(|(ti, qi)| ti - c * qi).collect();
    let norm = dot(&q2, &q2).sqrt();
    q2.iter_mut().for_each(|v| *v /= norm);
    Ok(KernelBasis { columns: [q1, q2] })
}

/// Solves `(I + alpha P'P) y = x`.
pub fn solve_smoother(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    Smoother::new(x.len(), alpha)?.apply(x)
}

/// Returns `P'(PP')^{-1} v` for `v` of length `n - 2`.
pub fn min_norm_right_inverse_apply(v: &[f64]) -> Result<Vec<f64>> {
    RightInverse::new(v.len() + 2)?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
        num / den
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn apply_p_examples() {
        assert_eq!(apply_p(&[1.0; 5]).unwrap(), vec![0.0; 3]);
        assert_eq!(apply_p(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 2]);
        assert_eq!(
            apply_p(&[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap(),
            vec![1.0, 2.0, 4.0]
        );
        assert!(matches!(
            apply_p(&[1.0, 2.0]),
            Err(crate::Error::Argument(_))
        ));
    }

    #[test]
    fn apply_pt_examples() {
        assert_eq!(apply_pt(&[0.0, 0.0]).unwrap(), vec![0.0; 4]);
        assert_eq!(apply_pt(&[1.0, 0.0]).unwrap(), vec![1.0, -2.0, 1.0, 0.0]);
        let p = SecondDifference::new(6).unwrap();
        assert!(p.apply_transpose(&[1.0; 3]).is_err());
    }

    #[test]
    fn transpose_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let p = SecondDifference::new(n).unwrap();
        let dp = dense_p(n);
        for _ in 0..50 {
            let y = random_vec(&mut rng, n);
            let v = random_vec(&mut rng, n - 2);
            let lhs = dot(&p.apply(&y).unwrap(), &v);
            let rhs = dot(&y, &p.apply_transpose(&v).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12);
            let dense = dp.transpose() * DVector::from_vec(v.clone());
            assert!(rel_err(&p.apply_transpose(&v).unwrap(), dense.as_slice()) < 1e-14);
        }
    }

    #[test]
    fn gram_matches_dense_product() {
        let g = gram_ptp(5).unwrap();
        let row = |i: usize| (0..5).map(|j| g.get(i, j)).collect::<Vec<_>>();
        assert_eq!(row(2), vec![1.0, -4.0, 6.0, -4.0, 1.0]);
        assert_eq!(row(0), vec![1.0, -2.0, 1.0, 0.0, 0.0]);
        for n in [3, 4, 5, 9, 20] {
            let dp = dense_p(n);
            let dense = dp.transpose() * &dp;
            let g = gram_ptp(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g.get(i, j), dense[(i, j)]);
                    assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
        }
    }

    #[test]
    fn kernel_basis_is_orthonormal_and_annihilated() {
        let z = kernel_z(3).unwrap();
        for col in &z.columns {
            for v in apply_p(col).unwrap() {
                assert!(v.abs() <= 1e-12);
            }
        }
        let z = kernel_z(10).unwrap();
        let g = [
            [
                dot(&z.columns[0], &z.columns[0]),
                dot(&z.columns[0], &z.columns[1]),
            ],
            [
                dot(&z.columns[1], &z.columns[0]),
                dot(&z.columns[1], &z.columns[1]),
            ],
        ];
        assert!((g[0][0] - 1.0).abs() < 1e-12 && (g[1][1] - 1.0).abs() < 1e-12);
        assert!(g[0][1].abs() < 1e-12);
    }

    #[test]
    fn kernel_projection_fixes_null_space() {
        // Oracle: null space of the dense P from its SVD.
        let n = 50;
        let svd = dense_p(n).svd(false, true);
        let vt = svd.v_t.unwrap();
        let z = kernel_z(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Rows of V' beyond rank n-2 span ker P; nalgebra's thin SVD only
        // returns n-2 rows, so build the complement by projection.
        let range = vt.transpose();
        for _ in 0..20 {
            let w = DVector::from_vec(random_vec(&mut rng, n));
            let y = &w - &range * (range.transpose() * &w);
            let y = y.as_slice();
            let back = z.project(y);
            assert!(rel_err(&back, y) <= 1e-9);
        }
    }

    fn dense_smoother(x: &[f64], alpha: f64) -> Vec<f64> {
        let n = x.len();
        let dp = dense_p(n);
        let a = DMatrix::identity(n, n) + dp.transpose() * &dp * alpha;
        a.lu()
            .solve(&DVector::from_column_slice(x))
            .unwrap()
            .as_slice()
            .to_vec()
    }

    #[test]
    fn smoother_examples() {
        let x = [1.0, 2.0, 4.0, 8.0, 16.0];
        assert_eq!(solve_smoother(&x, 0.0).unwrap(), x.to_vec());
        let y = solve_smoother(&x, 1.0).unwrap();
        assert!(rel_err(&y, &dense_smoother(&x, 1.0)) < 1e-12);
        let affine: Vec<f64> = (0..30).map(|i| 2.5 - 0.3 * i as f64).collect();
        for alpha in [0.5, 10.0, 1e6, 1e12] {
            let y = solve_smoother(&affine, alpha).unwrap();
            assert!(rel_err(&y, &affine) <= 1e-10, "alpha {alpha}");
        }
    }

    #[test]
    fn smoother_errors() {
        assert!(matches!(
            solve_smoother(&[1.0; 5], -1.0),
            Err(crate::Error::Domain(_))
        ));
        assert!(matches!(
            solve_smoother(&[1.0, f64::NAN, 1.0], 1.0),
            Err(crate::Error::Argument(_))
        ));
        assert!(solve_smoother(&[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn banded_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [5, 17, 101] {
            for _ in 0..100 {
                let x = random_vec(&mut rng, n);
                let alpha = 10f64.powf(rng.gen_range(-3.0..4.0));
                let y = solve_smoother(&x, alpha).unwrap();
                assert!(rel_err(&y, &dense_smoother(&x, alpha)) <= 1e-10);
            }
        }
    }

    #[test]
    fn smoother_spectrum_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3, 8, 50] {
            let alpha = rng.gen_range(0.01..100.0);
            let s = Smoother::new(n, alpha).unwrap();
            let cols: Vec<f64> = (0..n)
                .flat_map(|k| {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    s.apply(&e).unwrap()
                })
                .collect();
            let f = DMatrix::from_column_slice(n, n, &cols);
            assert!((&f - f.transpose()).amax() < 1e-12);
            let eig = f.symmetric_eigen();
            for &l in eig.eigenvalues.iter() {
                assert!(l > 0.0 && l <= 1.0 + 1e-12, "eigenvalue {l}");
            }
        }
    }

    #[test]
    fn right_inverse_examples() {
        assert_eq!(
            min_norm_right_inverse_apply(&[0.0; 4]).unwrap(),
            vec![0.0; 6]
        );

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let z = kernel_z(10).unwrap();
        for _ in 0..20 {
            let v = random_vec(&mut rng, 8);
            let w = min_norm_right_inverse_apply(&v).unwrap();
            assert!(rel_err(&apply_p(&w).unwrap(), &v) <= 1e-10);
            let c = z.coordinates(&w);
            assert!(c[0].abs() <= 1e-9 && c[1].abs() <= 1e-9);
        }

        // Dense pseudo-inverse oracle.
        let v = [1.0, 0.0, 0.0, 0.0];
        let pinv = dense_p(6).pseudo_inverse(1e-14).unwrap();
        let expect = pinv * DVector::from_column_slice(&v);
        let w = min_norm_right_inverse_apply(&v).unwrap();
        assert!(rel_err(&w, expect.as_slice()) <= 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymPentadiagonal {
            diag: vec![1.0, 1.0, 1.0],
            off1: vec![2.0, 0.0],
            off2: vec![0.0],
        };
        assert!(BandedCholesky::factor(&a).is_err());
    }

    #[test]
    fn matvec_inverts_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = gram_ptp(40).unwrap().shifted_identity(3.0);
        let f = BandedCholesky::factor(&a).unwrap();
        let b = random_vec(&mut rng, 40);
        let x = f.solve(&b).unwrap();
        assert!(rel_err(&a.matvec(&x), &b) < 1e-12);
    }

    #[test]
    fn right_inverse_is_stable_for_long_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 1_000_000;
        let ri = RightInverse::new(n).unwrap();
        let v = random_vec(&mut rng, n - 2);
        let y = ri.apply(&v).unwrap();
        let back = ri.operator().apply(&y).unwrap();
        assert!(rel_err(&back, &v) < 1e-8, "{}", rel_err(&back, &v));
        let z = kernel_z(n).unwrap();
        let c = z.coordinates(&y);
        let scale = dot(&y, &y).sqrt();
        assert!(
            c[0].abs() < 1e-12 * scale && c[1].abs() < 1e-12 * scale,
            "{c:?} {scale}"
        );

        // <P^+ v, w> == <v, (P^+)' w>
        let w = random_vec(&mut rng, n);
        let lhs = dot(&y, &w);
        let rhs = dot(&v, &ri.apply_transpose(&w).unwrap());
        assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
            "{lhs} {rhs}"
        );
    }
}
