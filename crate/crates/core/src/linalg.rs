//! Small dense symmetric linear algebra: just enough for reference solves,
//! spectral norms and PSD certification. Problems here are desk-scale, so the
//! classic dense algorithms (LDL^T, cyclic Jacobi, power iteration) are used
//! directly.

use crate::error::{Error, Result};
use crate::vector::DenseVector;

/// A dense symmetric matrix, stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from explicit rows, rejecting non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for (j, &value) in row.iter().enumerate().take(i) {
                let delta = (value - rows[j][i]).abs();
                if delta > 0.0 {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        delta,
                    });
                }
            }
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn matvec(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.dim, x.dim(), "matvec: dimension mismatch");
        let mut out = DenseVector::zeros(self.dim);
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = row
                .iter()
                .zip(x.as_slice())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        out
    }

    /// x^T M x
    pub fn quad_form(&self, x: &DenseVector) -> f64 {
        self.matvec(x).dot(x)
    }

    /// self += c * I
    pub fn add_scaled_identity(&mut self, c: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += c;
        }
    }

    /// self += c * other
    pub fn add_scaled(&mut self, other: &SymMatrix, c: f64) {
        assert_eq!(self.dim, other.dim, "add_scaled: dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    /// self += c * x x^T (rank-one update; exactly symmetric by construction).
    pub fn add_scaled_outer(&mut self, x: &DenseVector, c: f64) {
        assert_eq!(self.dim, x.dim(), "add_scaled_outer: dimension mismatch");
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] += c * x[i] * x[j];
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in self.data.iter_mut() {
            *a *= c;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Solves `a x = b` for symmetric positive definite `a` via a root-free
/// LDL^T factorization. Fails on a non-positive pivot.
pub fn solve_spd(a: &SymMatrix, b: &DenseVector) -> Result<DenseVector> {
    let n = a.dim();
    assert_eq!(n, b.dim(), "solve_spd: dimension mismatch");
    // Factor A = L D L^T with unit lower-triangular L.
    let mut l = vec![0.0f64; n * n];
    let mut d = vec![0.0f64; n];
    for j in 0..n {
        let mut dj = a.get(j, j);
        for k in 0..j {
            dj -= l[j * n + k] * l[j * n + k] * d[k];
        }
        if dj <= 0.0 || !dj.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot: dj });
        }
        d[j] = dj;
        l[j * n + j] = 1.0;
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k] * d[k];
            }
            l[i * n + j] = v / dj;
        }
    }
    // Forward solve L z = b.
    let mut z = vec![0.0f64; n];
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * z[k];
        }
        z[i] = v;
    }
    // Scale by D^{-1}, then back solve L^T x = y.
    let mut x = DenseVector::zeros(n);
    for i in (0..n).rev() {
        let mut v = z[i] / d[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * x[k];
        }
        x[i] = v;
    }
    Ok(x)
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    if n == 0 {
        return Vec::new();
    }
    let mut a = m.data.clone();
    let scale = m.max_abs().max(1e-300);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    eigs
}

pub fn min_eigenvalue(m: &SymMatrix) -> f64 {
    sym_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(0.0)
}

const POWER_ITERATION_CAP: usize = 100_000;

/// Spectral norm of a symmetric (possibly indefinite) matrix, via power
/// iteration on M^2 so negative eigenvalues cannot hide. Relative tolerance
/// on the squared norm estimate.
pub fn spectral_norm(m: &SymMatrix, tol: f64) -> Result<f64> {
    let n = m.dim();
    if n == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    // Deterministic start with uneven components so a dominant eigenvector is
    // generically not missed.
    let mut x = DenseVector::from_vec((0..n).map(|i| 1.0 + 0.01 * (i + 1) as f64).collect());
    x.scale(1.0 / x.norm());
    let mut prev = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        let y = m.matvec(&x);
        let est = y.norm_sq(); // Rayleigh quotient of M^2 at unit x.
        if (est - prev).abs() <= tol * est.max(1.0) {
            return Ok(est.sqrt());
        }
        prev = est;
        let z = m.matvec(&y);
        let zn = z.norm();
        if zn == 0.0 {
            // x fell into the kernel of M^2; the estimate so far is exact.
            return Ok(est.sqrt());
        }
        x = z.scaled(1.0 / zn);
    }
    Err(Error::PowerIterationStalled {
        max_iter: POWER_ITERATION_CAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[f64]) -> SymMatrix {
        let n = entries.len();
        let mut m = SymMatrix::zeros(n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        let err = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn solve_spd_known_system() {
        // A = [[4,1],[1,3]], b = [1,2] -> x = [1/11, 7/11]
        let a = SymMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = DenseVector::from_vec(vec![1.0, 2.0]);
        let x = solve_spd(&a, &b).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn solve_spd_one_dimensional_is_exact_division() {
        let a = SymMatrix::from_rows(&[vec![2.0]]).unwrap();
        let b = DenseVector::from_vec(vec![1.0]);
        let x = solve_spd(&a, &b).unwrap();
        assert_eq!(x[0], 0.5);
    }

    #[test]
    fn solve_spd_rejects_indefinite() {
        let a = SymMatrix::from_rows(&[vec![-1.0]]).unwrap();
        let b = DenseVector::from_vec(vec![1.0]);
        assert!(matches!(
            solve_spd(&a, &b),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn jacobi_two_by_two_analytic() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = sym_eigenvalues(&a);
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_diagonal_passthrough() {
        let eigs = sym_eigenvalues(&diag(&[3.0, -5.0, 0.5]));
        assert_eq!(eigs, vec![-5.0, 0.5, 3.0]);
    }

    #[test]
    fn spectral_norm_indefinite_diagonal() {
        let l = spectral_norm(&diag(&[3.0, -5.0]), 1e-10).unwrap();
        assert!((l - 5.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        assert_eq!(spectral_norm(&SymMatrix::zeros(4), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_update_matches_outer_product() {
        let x = DenseVector::from_vec(vec![1.0, -2.0]);
        let mut m = SymMatrix::zeros(2);
        m.add_scaled_outer(&x, 0.5);
        assert_eq!(m.get(0, 0), 0.5);
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(1, 1), 2.0);
    }
}
