//! Dual-free stochastic dual coordinate ascent.
//!
//! The solver keeps one pseudo-dual vector per component loss and updates it
//! from component gradients alone; no conjugate functions appear anywhere.
//! Each iteration picks a component i uniformly at random, forms
//! v = grad phi_i(w) + alpha_i, then moves
//!
//!   alpha_i <- alpha_i - eta * lambda * n * v
//!   w       <- w - eta * v
//!
//! which preserves the relation w = (1/(lambda n)) sum_i alpha_i exactly in
//! real arithmetic. The alpha table costs n * d reals and is materialized
//! explicitly; that is the algorithm's memory footprint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::Problem;
use crate::vector::DenseVector;

/// Validated step-size bundle. `beta = eta * lambda * n` must stay strictly
/// below one; construction rejects anything else rather than clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    lambda: f64,
    eta: f64,
    n: usize,
    beta: f64,
}

impl HyperParams {
    pub fn new(lambda: f64, eta: f64, n: usize) -> Result<Self> {
        crate::error::ensure_positive("lambda", lambda)?;
        crate::error::ensure_positive("eta", eta)?;
        if n == 0 {
            return Err(Error::NonPositive {
                name: "n",
                value: 0.0,
            });
        }
        let beta = eta * lambda * n as f64;
        if beta >= 1.0 {
            return Err(Error::BetaTooLarge { beta });
        }
        Ok(Self {
            lambda,
            eta,
            n,
            beta,
        })
    }

    /// Hyper-parameters for `problem` with an explicit step size.
    pub fn for_problem(problem: &Problem, eta: f64) -> Result<Self> {
        Self::new(problem.lambda(), eta, problem.n())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Step size for problems whose components are all smooth and convex:
/// eta = 1 / (L + lambda n). The induced beta = lambda n / (L + lambda n)
/// is below one for any valid input.
pub fn step_size_convex(smoothness: f64, lambda: f64, n: usize) -> Result<f64> {
    validate_step_inputs(smoothness, lambda, n)?;
    Ok(1.0 / (smoothness + lambda * n as f64))
}

/// Step size for problems that are only convex on average:
/// eta = min(lambda / (2 L^2), 1 / (2 lambda n)). The second term caps the
/// induced beta at 1/2.
pub fn step_size_nonconvex(smoothness: f64, lambda: f64, n: usize) -> Result<f64> {
    validate_step_inputs(smoothness, lambda, n)?;
    let a = lambda / (2.0 * smoothness * smoothness);
    let b = 1.0 / (2.0 * lambda * n as f64);
    Ok(a.min(b))
}

fn validate_step_inputs(smoothness: f64, lambda: f64, n: usize) -> Result<()> {
    crate::error::ensure_positive("smoothness", smoothness)?;
    crate::error::ensure_positive("lambda", lambda)?;
    if n == 0 {
        return Err(Error::NonPositive {
            name: "n",
            value: 0.0,
        });
    }
    Ok(())
}

/// What a single step did: which component was picked and the update
/// direction v = grad phi_i(w) + alpha_i it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub index: usize,
    pub direction: DenseVector,
    pub direction_norm_sq: f64,
}

/// Solver state: the iterate, the pseudo-dual table and a seeded RNG.
///
/// The iterate always satisfies w = (1/(lambda n)) sum_i alpha_i up to
/// accumulated floating-point error; `primal_dual_residual` measures the
/// drift and the run loop checks it periodically in debug builds.
#[derive(Debug, Clone)]
pub struct SolverState {
    w: DenseVector,
    alphas: Vec<DenseVector>,
    t: u64,
    rng: ChaCha8Rng,
}

impl SolverState {
    /// Initializes from explicit dual vectors: w = (1/(lambda n)) sum_i
    /// alpha0_i, iteration count zero, RNG seeded from `seed`.
    pub fn init(problem: &Problem, alpha0: Vec<DenseVector>, seed: u64) -> Result<Self> {
        let n = problem.n();
        if alpha0.len() != n {
            return Err(Error::DualCountMismatch {
                expected: n,
                got: alpha0.len(),
            });
        }
        let d = problem.dim();
        for a in &alpha0 {
            if a.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: a.dim(),
                });
            }
        }
        let mut w = DenseVector::zeros(d);
        for a in &alpha0 {
            w.axpy(1.0, a);
        }
        w.scale(1.0 / (problem.lambda() * n as f64));
        Ok(Self {
            w,
            alphas: alpha0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// All-zero dual start (gives w = 0). The default initialization.
    pub fn init_zero(problem: &Problem, seed: u64) -> Result<Self> {
        let alpha0 = vec![DenseVector::zeros(problem.dim()); problem.n()];
        Self::init(problem, alpha0, seed)
    }

    /// Gradient-warm start: alpha0_i = -grad phi_i(w0).
    pub fn init_warm(problem: &Problem, w0: &DenseVector, seed: u64) -> Result<Self> {
        if w0.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: w0.dim(),
            });
        }
        let alpha0 = problem
            .components()
            .iter()
            .map(|c| c.grad(w0).scaled(-1.0))
            .collect();
        Self::init(problem, alpha0, seed)
    }

    pub fn w(&self) -> &DenseVector {
        &self.w
    }

    pub fn alpha(&self, i: usize) -> &DenseVector {
        &self.alphas[i]
    }

    pub fn alphas(&self) -> &[DenseVector] {
        &self.alphas
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// || w - (1/(lambda n)) sum_i alpha_i ||
    pub fn primal_dual_residual(&self, lambda: f64) -> f64 {
        let mut acc = DenseVector::zeros(self.w.dim());
        for a in &self.alphas {
            acc.axpy(1.0, a);
        }
        acc.scale(1.0 / (lambda * self.alphas.len() as f64));
        acc.dist_sq(&self.w).sqrt()
    }

    /// One solver step with a uniformly drawn component index. On a
    /// non-finite gradient the state (including the RNG) is left untouched
    /// and an error describing the offending component is returned.
    pub fn step(&mut self, problem: &Problem, hp: &HyperParams) -> Result<StepReport> {
        let mut rng_next = self.rng.clone();
        let i = rng_next.gen_range(0..problem.n());
        let report = self.step_at(problem, hp, i)?;
        self.rng = rng_next;
        Ok(report)
    }

    /// One solver step with a forced component index. Does not touch the
    /// RNG; exact-expectation diagnostics enumerate steps through this.
    pub fn step_at(&mut self, problem: &Problem, hp: &HyperParams, i: usize) -> Result<StepReport> {
        debug_assert_eq!(hp.n(), problem.n());
        let g = problem.component(i).grad(&self.w);
        if !g.all_finite() {
            return Err(Error::NonFiniteGradient {
                component: i,
                iteration: self.t + 1,
            });
        }
        let mut v = g;
        v.axpy(1.0, &self.alphas[i]);
        self.alphas[i].axpy(-hp.beta(), &v);
        self.w.axpy(-hp.eta(), &v);
        self.t += 1;
        Ok(StepReport {
            index: i,
            direction_norm_sq: v.norm_sq(),
            direction: v,
        })
    }
}

/// Constant for the primal-dual drift budget; see `primal_dual_tolerance`.
pub const PD_DRIFT_CONST: f64 = 8.0;

/// Floating-point budget for the primal-dual residual after `steps`
/// iterations in dimension `dim`, given the largest update norm seen.
pub fn primal_dual_tolerance(dim: usize, steps: u64, max_direction_norm: f64) -> f64 {
    PD_DRIFT_CONST * dim as f64 * steps as f64 * f64::EPSILON * max_direction_norm.max(1.0)
}

#[cfg(debug_assertions)]
const PD_CHECK_EVERY: u64 = 256;

/// Applies `steps` solver steps, invoking `hook` after each one with the
/// step report and the updated state. Fully deterministic given the state's
/// seed, the problem and the hyper-parameters. A failed step terminates the
/// run; the error names the iteration.
pub fn run_traced<F>(
    state: &mut SolverState,
    problem: &Problem,
    hp: &HyperParams,
    steps: u64,
    mut hook: F,
) -> Result<()>
where
    F: FnMut(&StepReport, &SolverState),
{
    #[cfg(debug_assertions)]
    let mut max_direction = 0.0f64;
    for _ in 0..steps {
        let report = state.step(problem, hp)?;
        #[cfg(debug_assertions)]
        {
            max_direction = max_direction.max(report.direction_norm_sq.sqrt());
            if state.t.is_multiple_of(PD_CHECK_EVERY) {
                let residual = state.primal_dual_residual(hp.lambda());
                let tol = primal_dual_tolerance(state.w.dim(), state.t, max_direction);
                debug_assert!(
                    residual <= tol,
                    "primal-dual drift {residual} exceeds budget {tol} at iteration {}",
                    state.t
                );
            }
        }
        hook(&report, state);
    }
    Ok(())
}

/// `run_traced` without a hook.
pub fn run(state: &mut SolverState, problem: &Problem, hp: &HyperParams, steps: u64) -> Result<()> {
    run_traced(state, problem, hp, steps, |_, _| {})
}
