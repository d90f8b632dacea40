//! Dense fixed-dimension vectors used for iterates, pseudo-dual vectors and
//! gradients. All core arithmetic is 64-bit.

use std::ops::{Index, IndexMut};

/// A dense real vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// self += a * x
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.dim(), x.dim(), "axpy: dimension mismatch");
        for (s, v) in self.data.iter_mut().zip(x.data.iter()) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in self.data.iter_mut() {
            *s *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist_sq(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dist_sq: dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(data: Vec<f64>) -> Self {
        Self { data }
    }
}

/// Sums `xs` by recursive halving. Order-independent of any outer chunking,
/// so parallel producers can be averaged deterministically.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 8;
    match xs.len() {
        0 => 0.0,
        n if n <= BASE => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axpy_and_dot() {
        let mut a = DenseVector::from_vec(vec![1.0, 2.0]);
        let b = DenseVector::from_vec(vec![3.0, -1.0]);
        a.axpy(2.0, &b);
        assert_eq!(a.as_slice(), &[7.0, 0.0]);
        assert_eq!(a.dot(&b), 21.0);
    }

    #[test]
    fn dist_sq_matches_sub_norm() {
        let a = DenseVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = DenseVector::from_vec(vec![0.0, -2.0, 5.0]);
        assert_eq!(a.dist_sq(&b), a.sub(&b).norm_sq());
    }

    #[test]
    fn pairwise_sum_small_and_large() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn finite_detection() {
        assert!(DenseVector::from_vec(vec![1.0, -2.0]).all_finite());
        assert!(!DenseVector::from_vec(vec![1.0, f64::NAN]).all_finite());
        assert!(!DenseVector::from_vec(vec![f64::INFINITY]).all_finite());
    }
}
