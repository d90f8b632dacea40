//! Component losses: gradient oracles with exact smoothness constants, and
//! the regularized finite-sum objective built from them.
//!
//! Four families are shipped. Three are convex generalized-linear losses
//! (squared, logistic, smoothed hinge); the fourth is a quadratic whose matrix
//! may be indefinite, so that individual components can be non-convex while
//! their average stays convex.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, spectral_norm, SymMatrix};
use crate::vector::{pairwise_sum, DenseVector};

/// Tolerance below which a smallest eigenvalue still counts as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

/// Relative tolerance for the power iteration behind quadratic smoothness
/// constants.
pub const SPECTRAL_NORM_TOL: f64 = 1e-10;

/// The convex generalized-linear loss kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlmKind {
    /// phi(w) = 1/2 (x^T w - y)^2
    Squared,
    /// phi(w) = log(1 + exp(-y x^T w))
    Logistic,
    /// 1-smoothed hinge of the margin y x^T w: zero above 1, quadratic on
    /// [0, 1], linear below 0.
    SmoothedHinge,
}

/// One component loss with its cached smoothness constant.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentLoss {
    Glm {
        kind: GlmKind,
        x: DenseVector,
        y: f64,
    },
    /// phi(w) = 1/2 w^T Q w + b^T w, with Q symmetric but not necessarily
    /// positive semidefinite.
    Quadratic {
        q: SymMatrix,
        b: DenseVector,
        smoothness: f64,
    },
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl ComponentLoss {
    pub fn squared(x: DenseVector, y: f64) -> Self {
        Self::Glm {
            kind: GlmKind::Squared,
            x,
            y,
        }
    }

    pub fn logistic(x: DenseVector, y: f64) -> Self {
        Self::Glm {
            kind: GlmKind::Logistic,
            x,
            y,
        }
    }

    pub fn smoothed_hinge(x: DenseVector, y: f64) -> Self {
        Self::Glm {
            kind: GlmKind::SmoothedHinge,
            x,
            y,
        }
    }

    pub fn glm(kind: GlmKind, x: DenseVector, y: f64) -> Self {
        Self::Glm { kind, x, y }
    }

    /// Builds the quadratic component and computes its smoothness constant
    /// (the spectral norm of `q`) up front.
    pub fn indefinite_quadratic(q: SymMatrix, b: DenseVector) -> Result<Self> {
        if q.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                got: b.dim(),
            });
        }
        let smoothness = spectral_norm(&q, SPECTRAL_NORM_TOL)?;
        Ok(Self::Quadratic { q, b, smoothness })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Glm { x, .. } => x.dim(),
            Self::Quadratic { b, .. } => b.dim(),
        }
    }

    /// phi_i(w)
    pub fn value(&self, w: &DenseVector) -> f64 {
        assert_eq!(self.dim(), w.dim(), "loss value: dimension mismatch");
        match self {
            Self::Glm { kind, x, y } => {
                let s = x.dot(w);
                match kind {
                    GlmKind::Squared => {
                        let r = s - y;
                        0.5 * r * r
                    }
                    GlmKind::Logistic => softplus(-y * s),
                    GlmKind::SmoothedHinge => {
                        let z = y * s;
                        if z >= 1.0 {
                            0.0
                        } else if z <= 0.0 {
                            0.5 - z
                        } else {
                            let r = 1.0 - z;
                            0.5 * r * r
                        }
                    }
                }
            }
            Self::Quadratic { q, b, .. } => 0.5 * q.quad_form(w) + b.dot(w),
        }
    }

    /// grad phi_i(w)
    pub fn grad(&self, w: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), w.dim(), "loss grad: dimension mismatch");
        match self {
            Self::Glm { kind, x, y } => {
                let s = x.dot(w);
                let dz = match kind {
                    GlmKind::Squared => s - y,
                    GlmKind::Logistic => -y * sigmoid(-y * s),
                    GlmKind::SmoothedHinge => {
                        let z = y * s;
                        let slope = if z >= 1.0 {
                            0.0
                        } else if z <= 0.0 {
                            -1.0
                        } else {
                            z - 1.0
                        };
                        slope * y
                    }
                };
                x.scaled(dz)
            }
            Self::Quadratic { q, b, .. } => {
                let mut g = q.matvec(w);
                g.axpy(1.0, b);
                g
            }
        }
    }

    /// The Lipschitz constant of the gradient.
    pub fn smoothness_constant(&self) -> f64 {
        match self {
            Self::Glm { kind, x, .. } => {
                let xs = x.norm_sq();
                match kind {
                    GlmKind::Squared | GlmKind::SmoothedHinge => xs,
                    GlmKind::Logistic => 0.25 * xs,
                }
            }
            Self::Quadratic { smoothness, .. } => *smoothness,
        }
    }

    /// Whether this single component is convex (within `PSD_TOL` for the
    /// quadratic family).
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Glm { .. } => true,
            Self::Quadratic { q, .. } => min_eigenvalue(q) >= -PSD_TOL,
        }
    }
}

/// How the convexity hypothesis is certified for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexityClass {
    /// Every component loss is convex.
    EachConvex,
    /// Some component is non-convex, but the average of the components is
    /// convex (certified through the average quadratic matrix).
    AverageConvex,
}

/// The regularized finite-sum objective
/// P(w) = (1/n) sum_i phi_i(w) + (lambda/2) ||w||^2.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    components: Vec<ComponentLoss>,
    lambda: f64,
    smoothness: f64,
    convexity: ConvexityClass,
    dim: usize,
}

impl Problem {
    /// Validates dimensions, caches the global smoothness constant
    /// L = max_i L_i, and certifies the convexity class. Construction fails
    /// if some component is non-convex and the average quadratic matrix is
    /// not positive semidefinite.
    pub fn new(components: Vec<ComponentLoss>, lambda: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyProblem);
        }
        crate::error::ensure_positive("lambda", lambda)?;
        let dim = components[0].dim();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let smoothness = components
            .iter()
            .map(ComponentLoss::smoothness_constant)
            .fold(0.0f64, f64::max);
        let convexity = if components.iter().all(ComponentLoss::is_convex) {
            ConvexityClass::EachConvex
        } else {
            // Only quadratic components can be non-convex; GLM components are
            // convex on their own, so the average of the quadratic matrices
            // being PSD certifies convexity of the whole average.
            let mut avg = SymMatrix::zeros(dim);
            let inv_n = 1.0 / components.len() as f64;
            for c in &components {
                if let ComponentLoss::Quadratic { q, .. } = c {
                    avg.add_scaled(q, inv_n);
                }
            }
            let min_eig = min_eigenvalue(&avg);
            if min_eig < -PSD_TOL {
                return Err(Error::AverageNotPsd {
                    min_eigenvalue: min_eig,
                });
            }
            ConvexityClass::AverageConvex
        };
        Ok(Self {
            components,
            lambda,
            smoothness,
            convexity,
            dim,
        })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Global smoothness constant L = max_i L_i.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn convexity(&self) -> ConvexityClass {
        self.convexity
    }

    pub fn component(&self, i: usize) -> &ComponentLoss {
        &self.components[i]
    }

    pub fn components(&self) -> &[ComponentLoss] {
        &self.components
    }

    /// P(w)
    pub fn objective(&self, w: &DenseVector) -> f64 {
        let values: Vec<f64> = self.components.iter().map(|c| c.value(w)).collect();
        pairwise_sum(&values) / self.n() as f64 + 0.5 * self.lambda * w.norm_sq()
    }

    /// grad P(w) = (1/n) sum_i grad phi_i(w) + lambda w
    pub fn full_gradient(&self, w: &DenseVector) -> DenseVector {
        let mut acc = DenseVector::zeros(self.dim);
        for c in &self.components {
            acc.axpy(1.0, &c.grad(w));
        }
        acc.scale(1.0 / self.n() as f64);
        acc.axpy(self.lambda, w);
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec1(v: f64) -> DenseVector {
        DenseVector::from_vec(vec![v])
    }

    #[test]
    fn squared_gradient_zero_at_zero_residual() {
        let loss = ComponentLoss::squared(DenseVector::from_vec(vec![1.0, 0.0]), 0.0);
        let g = loss.grad(&DenseVector::zeros(2));
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn squared_value_zero_at_exact_fit() {
        let loss = ComponentLoss::squared(DenseVector::from_vec(vec![1.0, 0.0]), 1.0);
        assert_eq!(loss.value(&DenseVector::from_vec(vec![1.0, 0.0])), 0.0);
    }

    #[test]
    fn quadratic_gradient_by_hand() {
        let q = SymMatrix::from_rows(&[vec![-1.0]]).unwrap();
        let loss = ComponentLoss::indefinite_quadratic(q, vec1(0.0)).unwrap();
        let g = loss.grad(&vec1(2.0));
        assert!((g[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_value_by_hand() {
        let q = SymMatrix::from_rows(&[vec![-1.0]]).unwrap();
        let loss = ComponentLoss::indefinite_quadratic(q, vec1(0.0)).unwrap();
        assert!((loss.value(&vec1(1.0)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn logistic_at_origin() {
        let x = DenseVector::from_vec(vec![2.0, -1.0]);
        let loss = ComponentLoss::logistic(x.clone(), 1.0);
        let w = DenseVector::zeros(2);
        // sigma(0) = 1/2, so the gradient is -y x / 2 and the value is log 2.
        let g = loss.grad(&w);
        assert!((g[0] + 1.0).abs() < 1e-15);
        assert!((g[1] - 0.5).abs() < 1e-15);
        assert!((loss.value(&w) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn logistic_is_overflow_safe() {
        let loss = ComponentLoss::logistic(vec1(1.0), 1.0);
        let far = vec1(-1e6);
        assert!(loss.value(&far).is_finite());
        assert!(loss.grad(&far).all_finite());
        let near = vec1(1e6);
        assert_eq!(loss.value(&near), 0.0);
    }

    #[test]
    fn smoothed_hinge_piecewise_zones() {
        let loss = ComponentLoss::smoothed_hinge(vec1(1.0), 1.0);
        // Margin >= 1: flat zero.
        assert_eq!(loss.value(&vec1(2.0)), 0.0);
        assert_eq!(loss.grad(&vec1(2.0))[0], 0.0);
        // Margin <= 0: linear with slope -1 in the margin.
        assert_eq!(loss.value(&vec1(-1.0)), 1.5);
        assert_eq!(loss.grad(&vec1(-1.0))[0], -1.0);
        // Mid zone: quadratic.
        assert_eq!(loss.value(&vec1(0.5)), 0.125);
        assert_eq!(loss.grad(&vec1(0.5))[0], -0.5);
    }

    #[test]
    fn smoothness_constants_by_hand() {
        let x = DenseVector::from_vec(vec![2.0, 0.0]);
        assert_eq!(ComponentLoss::squared(x.clone(), 0.0).smoothness_constant(), 4.0);
        assert_eq!(ComponentLoss::logistic(x.clone(), 0.0).smoothness_constant(), 1.0);
        assert_eq!(
            ComponentLoss::smoothed_hinge(x, 0.0).smoothness_constant(),
            4.0
        );
        let q = SymMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]).unwrap();
        let loss = ComponentLoss::indefinite_quadratic(q, DenseVector::zeros(2)).unwrap();
        assert!((loss.smoothness_constant() - 5.0).abs() < 1e-8);
    }

    #[test]
    fn objective_regularizer_only() {
        // All-zero quadratic losses, lambda = 2, unit-norm w -> P(w) = 1.
        let q = SymMatrix::zeros(2);
        let loss = ComponentLoss::indefinite_quadratic(q, DenseVector::zeros(2)).unwrap();
        let problem = Problem::new(vec![loss], 2.0).unwrap();
        let w = DenseVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(problem.objective(&w), 1.0);
    }

    #[test]
    fn one_dimensional_ridge_objective() {
        let problem = Problem::new(vec![ComponentLoss::squared(vec1(1.0), 1.0)], 1.0).unwrap();
        assert!((problem.objective(&vec1(0.5)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn convexity_certification() {
        let q1 = SymMatrix::from_rows(&[vec![1.0]]).unwrap();
        let q2 = SymMatrix::from_rows(&[vec![-0.5]]).unwrap();
        let c1 = ComponentLoss::indefinite_quadratic(q1, vec1(0.0)).unwrap();
        let c2 = ComponentLoss::indefinite_quadratic(q2, vec1(0.0)).unwrap();
        assert!(c1.is_convex());
        assert!(!c2.is_convex());
        // Average matrix 0.25 is PSD, so construction succeeds as
        // average-convex.
        let problem = Problem::new(vec![c1.clone(), c2.clone()], 1.0).unwrap();
        assert_eq!(problem.convexity(), ConvexityClass::AverageConvex);
        // Two copies of the indefinite component cannot average out.
        let err = Problem::new(vec![c2.clone(), c2], 1.0).unwrap_err();
        assert!(matches!(err, Error::AverageNotPsd { .. }));
        // All-convex components certify as each-convex.
        let problem = Problem::new(vec![c1, ComponentLoss::squared(vec1(1.0), 0.0)], 1.0).unwrap();
        assert_eq!(problem.convexity(), ConvexityClass::EachConvex);
    }

    #[test]
    fn problem_rejects_bad_inputs() {
        assert!(matches!(
            Problem::new(vec![], 1.0),
            Err(Error::EmptyProblem)
        ));
        let loss = ComponentLoss::squared(vec1(1.0), 0.0);
        assert!(matches!(
            Problem::new(vec![loss.clone()], 0.0),
            Err(Error::NonPositive { .. })
        ));
        let other = ComponentLoss::squared(DenseVector::zeros(2), 0.0);
        assert!(matches!(
            Problem::new(vec![loss, other], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn full_gradient_matches_objective_slope() {
        let problem = Problem::new(
            vec![
                ComponentLoss::squared(DenseVector::from_vec(vec![1.0, 2.0]), 1.0),
                ComponentLoss::logistic(DenseVector::from_vec(vec![-1.0, 0.5]), -1.0),
            ],
            0.3,
        )
        .unwrap();
        let w = DenseVector::from_vec(vec![0.4, -0.7]);
        let g = problem.full_gradient(&w);
        let h = 1e-6;
        for k in 0..2 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            let fd = (problem.objective(&wp) - problem.objective(&wm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6);
        }
    }
}
