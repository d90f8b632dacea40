//! Dual-free stochastic dual coordinate ascent for regularized loss
//! minimization, with the diagnostics needed to verify its convergence
//! behaviour empirically.
//!
//! The objective is the regularized finite sum
//! P(w) = (1/n) sum_i phi_i(w) + (lambda/2) ||w||^2. The solver keeps one
//! pseudo-dual vector per component and touches nothing but component
//! gradients, so it also applies when individual phi_i are non-convex as long
//! as their average is convex. Its update is an unbiased gradient estimate
//! whose variance vanishes at the minimizer — the property the [`sgd`]
//! baseline exists to contrast and the [`diagnostics`] module measures.
//!
//! Module map:
//! - [`sdca`]: solver state, the single step, the run loop, step-size rules.
//! - [`losses`]: component gradient oracles and the composite objective.
//! - [`problems`]: seeded generators, reference solutions, LIBSVM ingestion.
//! - [`diagnostics`]: potentials, exact one-step expectations, variance
//!   profiles, decay-rate fits.
//! - [`sgd`]: the plain stochastic-gradient comparator.

pub mod diagnostics;
pub mod linalg;
pub mod losses;
pub mod problems;
pub mod sdca;
pub mod sgd;
pub mod vector;

mod error;

pub use error::{Error, Result};
pub use vector::DenseVector;

pub use losses::{ComponentLoss, ConvexityClass, GlmKind, Problem};
pub use sdca::{step_size_convex, step_size_nonconvex, HyperParams, SolverState, StepReport};

pub use diagnostics::{Lyapunov, PotentialSnapshot, TraceField};
pub use problems::{Family, GeneratorSpec, ReferenceMethod, ReferenceSolution};
