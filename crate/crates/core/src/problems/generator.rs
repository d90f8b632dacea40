//! Seeded synthetic problem generators.
//!
//! The quadratic family draws per-component symmetric matrices with
//! eigenvalues in a configurable range that may include negatives, then adds
//! a common multiple of the identity so the average matrix becomes positive
//! definite while individual components may stay indefinite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymMatrix};
use crate::losses::{ComponentLoss, ConvexityClass, Problem};
use crate::vector::DenseVector;

/// Synthetic problem families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ridge,
    LogisticSynth,
    IndefiniteQuadratic,
}

/// Everything a generator run needs. Identical specs produce identical
/// problems.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub seed: u64,
    /// Label-noise level for the regression / classification families.
    pub noise: f64,
    /// Per-component eigenvalue range for the quadratic family; negatives
    /// allowed.
    pub eig_range: (f64, f64),
    /// Extra shift added on top of the average-PSD repair, so the average
    /// matrix ends up positive definite with this margin.
    pub psd_margin: f64,
    /// Fail generation unless at least one component stays indefinite after
    /// the repair shift.
    pub require_indefinite: bool,
}

impl GeneratorSpec {
    pub fn ridge(n: usize, d: usize, lambda: f64, seed: u64) -> Self {
        Self {
            family: Family::Ridge,
            n,
            d,
            lambda,
            seed,
            noise: 0.1,
            eig_range: (0.0, 0.0),
            psd_margin: 0.0,
            require_indefinite: false,
        }
    }

    pub fn logistic(n: usize, d: usize, lambda: f64, seed: u64) -> Self {
        Self {
            family: Family::LogisticSynth,
            ..Self::ridge(n, d, lambda, seed)
        }
    }

    pub fn indefinite_quadratic(n: usize, d: usize, lambda: f64, seed: u64) -> Self {
        Self {
            family: Family::IndefiniteQuadratic,
            n,
            d,
            lambda,
            seed,
            noise: 0.0,
            eig_range: (-1.0, 2.0),
            psd_margin: 0.1,
            require_indefinite: true,
        }
    }
}

/// Builds the problem described by `spec`, deterministically in the seed.
pub fn generate(spec: &GeneratorSpec) -> Result<Problem> {
    if spec.n == 0 {
        return Err(Error::EmptyProblem);
    }
    if spec.d == 0 {
        return Err(Error::NonPositive {
            name: "d",
            value: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.family {
        Family::Ridge => generate_glm(spec, &mut rng, false),
        Family::LogisticSynth => generate_glm(spec, &mut rng, true),
        Family::IndefiniteQuadratic => generate_quadratic(spec, &mut rng),
    }
}

fn generate_glm(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, classify: bool) -> Result<Problem> {
    let planted = gaussian_vector(spec.d, rng);
    let mut components = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = gaussian_vector(spec.d, rng);
        let signal = x.dot(&planted) + spec.noise * standard_normal(rng);
        let loss = if classify {
            let y = if signal >= 0.0 { 1.0 } else { -1.0 };
            ComponentLoss::logistic(x, y)
        } else {
            ComponentLoss::squared(x, signal)
        };
        components.push(loss);
    }
    Problem::new(components, spec.lambda)
}

fn generate_quadratic(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Problem> {
    let (lo, hi) = spec.eig_range;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InfeasibleGenerator(format!(
            "eigenvalue range ({lo}, {hi}) is empty"
        )));
    }
    if spec.require_indefinite && lo >= 0.0 {
        return Err(Error::InfeasibleGenerator(format!(
            "eigenvalue range ({lo}, {hi}) cannot produce an indefinite component"
        )));
    }
    if spec.psd_margin < 0.0 {
        return Err(Error::InfeasibleGenerator(format!(
            "psd margin {} is negative",
            spec.psd_margin
        )));
    }

    let mut matrices = Vec::with_capacity(spec.n);
    let mut linear = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let basis = random_orthogonal(spec.d, rng)?;
        let mut q = SymMatrix::zeros(spec.d);
        for column in &basis {
            let eig = rng.gen_range(lo..hi);
            q.add_scaled_outer(column, eig);
        }
        matrices.push(q);
        linear.push(gaussian_vector(spec.d, rng));
    }

    // Repair shift: move every component by s * I so the average becomes
    // positive definite with the requested margin.
    let mut avg = SymMatrix::zeros(spec.d);
    for q in &matrices {
        avg.add_scaled(q, 1.0 / spec.n as f64);
    }
    let shift = (-min_eigenvalue(&avg)).max(0.0) + spec.psd_margin;
    let mut components = Vec::with_capacity(spec.n);
    for (mut q, b) in matrices.into_iter().zip(linear) {
        q.add_scaled_identity(shift);
        components.push(ComponentLoss::indefinite_quadratic(q, b)?);
    }
    let problem = Problem::new(components, spec.lambda)?;
    if spec.require_indefinite && problem.convexity() != ConvexityClass::AverageConvex {
        return Err(Error::InfeasibleGenerator(format!(
            "no component stayed indefinite after the repair shift {shift}; widen the eigenvalue \
             range or lower the margin (seed {})",
            spec.seed
        )));
    }
    Ok(problem)
}

/// One standard normal draw via Box-Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 > 0.0 {
            let u2: f64 = rng.gen();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> DenseVector {
    DenseVector::from_vec((0..dim).map(|_| standard_normal(rng)).collect())
}

/// Orthonormal basis of R^dim from Gaussian draws and modified Gram-Schmidt.
fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<DenseVector>> {
    const MAX_ATTEMPTS: usize = 64;
    let mut basis: Vec<DenseVector> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut attempts = 0;
        loop {
            let mut candidate = gaussian_vector(dim, rng);
            for b in &basis {
                let c = candidate.dot(b);
                candidate.axpy(-c, b);
            }
            let norm = candidate.norm();
            if norm > 1e-8 {
                candidate.scale(1.0 / norm);
                basis.push(candidate);
                break;
            }
            attempts += 1;
            if attempts >= MAX_ATTEMPTS {
                return Err(Error::InfeasibleGenerator(
                    "could not draw an orthonormal basis".to_string(),
                ));
            }
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_spec_same_problem() {
        let spec = GeneratorSpec::ridge(10, 4, 0.5, 77);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let spec = GeneratorSpec::indefinite_quadratic(6, 3, 0.2, 13);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 14;
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn ridge_components_are_squared_losses() {
        let problem = generate(&GeneratorSpec::ridge(5, 3, 1.0, 0)).unwrap();
        assert_eq!(problem.n(), 5);
        assert_eq!(problem.dim(), 3);
        assert_eq!(problem.convexity(), ConvexityClass::EachConvex);
    }

    #[test]
    fn logistic_labels_are_signs() {
        let problem = generate(&GeneratorSpec::logistic(20, 4, 1.0, 3)).unwrap();
        for c in problem.components() {
            match c {
                ComponentLoss::Glm { y, .. } => assert!(*y == 1.0 || *y == -1.0),
                other => panic!("unexpected component {other:?}"),
            }
        }
    }

    #[test]
    fn quadratic_family_is_average_convex_with_indefinite_component() {
        let problem = generate(&GeneratorSpec::indefinite_quadratic(20, 8, 0.1, 42)).unwrap();
        assert_eq!(problem.convexity(), ConvexityClass::AverageConvex);
        assert!(problem.components().iter().any(|c| !c.is_convex()));
        // The average matrix itself is PSD (certified during construction);
        // recheck directly.
        let mut avg = SymMatrix::zeros(problem.dim());
        for c in problem.components() {
            if let ComponentLoss::Quadratic { q, .. } = c {
                avg.add_scaled(q, 1.0 / problem.n() as f64);
            }
        }
        assert!(min_eigenvalue(&avg) >= -1e-10);
    }

    #[test]
    fn infeasible_knobs_are_rejected() {
        let mut spec = GeneratorSpec::indefinite_quadratic(4, 2, 1.0, 0);
        spec.eig_range = (0.5, 2.0);
        assert!(matches!(
            generate(&spec),
            Err(Error::InfeasibleGenerator(_))
        ));
        let mut spec = GeneratorSpec::indefinite_quadratic(4, 2, 1.0, 0);
        spec.eig_range = (2.0, 2.0);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn generated_orthogonal_basis_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = random_orthogonal(5, &mut rng).unwrap();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - expected).abs() < 1e-12);
            }
        }
    }
}
