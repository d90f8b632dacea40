//! Shared fixtures for the solver benchmarks.

use dfsdca::problems::{generate, solve_reference, GeneratorSpec, ReferenceSolution};
use dfsdca::{step_size_convex, step_size_nonconvex, ConvexityClass, HyperParams, Problem};

/// A generated ridge instance with its reference solution and the convex-rule
/// hyper-parameters.
pub fn ridge_fixture(n: usize, d: usize) -> (Problem, ReferenceSolution, HyperParams) {
    let problem = generate(&GeneratorSpec::ridge(n, d, 0.1, 99)).unwrap();
    let reference = solve_reference(&problem).unwrap();
    let eta = step_size_convex(problem.smoothness(), problem.lambda(), problem.n()).unwrap();
    let hp = HyperParams::for_problem(&problem, eta).unwrap();
    (problem, reference, hp)
}

/// An average-convex quadratic instance with the non-convex-rule step size.
pub fn quadratic_fixture(n: usize, d: usize) -> (Problem, ReferenceSolution, HyperParams) {
    let problem = generate(&GeneratorSpec::indefinite_quadratic(n, d, 0.1, 99)).unwrap();
    assert_eq!(problem.convexity(), ConvexityClass::AverageConvex);
    let reference = solve_reference(&problem).unwrap();
    let eta = step_size_nonconvex(problem.smoothness(), problem.lambda(), problem.n()).unwrap();
    let hp = HyperParams::for_problem(&problem, eta).unwrap();
    (problem, reference, hp)
}
