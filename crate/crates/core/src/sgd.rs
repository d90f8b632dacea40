//! Plain stochastic gradient descent on the composite objective, with the
//! regularizer folded into every stochastic gradient. This is the comparator
//! whose update variance does NOT vanish near the minimizer: at w* the
//! per-component directions grad phi_i(w*) + lambda w* are generally nonzero
//! even though their average is.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::Problem;
use crate::sdca::StepReport;
use crate::vector::DenseVector;

/// Step-size schedule. `Decaying` uses eta_t = eta0 / (1 + lambda t) with t
/// counted from zero, the standard choice under strong convexity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    Decaying(f64),
}

impl StepSchedule {
    pub fn at(&self, t: u64, lambda: f64) -> f64 {
        match *self {
            StepSchedule::Constant(eta0) => eta0,
            StepSchedule::Decaying(eta0) => eta0 / (1.0 + lambda * t as f64),
        }
    }
}

/// SGD state: just the iterate and a seeded RNG — no dual table.
#[derive(Debug, Clone)]
pub struct SgdState {
    w: DenseVector,
    t: u64,
    rng: ChaCha8Rng,
}

impl SgdState {
    pub fn init(problem: &Problem, w0: DenseVector, seed: u64) -> Result<Self> {
        if w0.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: w0.dim(),
            });
        }
        Ok(Self {
            w: w0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn init_zero(problem: &Problem, seed: u64) -> Result<Self> {
        Self::init(problem, DenseVector::zeros(problem.dim()), seed)
    }

    pub fn w(&self) -> &DenseVector {
        &self.w
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// One SGD step: i uniform, v = grad phi_i(w) + lambda w, then
    /// w <- w - eta_t v. Unbiased for grad P(w) by construction.
    pub fn step(&mut self, problem: &Problem, schedule: &StepSchedule) -> Result<StepReport> {
        let mut rng_next = self.rng.clone();
        let i = rng_next.gen_range(0..problem.n());
        let report = self.step_at(problem, schedule, i)?;
        self.rng = rng_next;
        Ok(report)
    }

    /// Forced-index variant, used to enumerate the update distribution.
    pub fn step_at(
        &mut self,
        problem: &Problem,
        schedule: &StepSchedule,
        i: usize,
    ) -> Result<StepReport> {
        let g = problem.component(i).grad(&self.w);
        if !g.all_finite() {
            return Err(Error::NonFiniteGradient {
                component: i,
                iteration: self.t + 1,
            });
        }
        let mut v = g;
        v.axpy(problem.lambda(), &self.w);
        let eta = schedule.at(self.t, problem.lambda());
        self.w.axpy(-eta, &v);
        self.t += 1;
        Ok(StepReport {
            index: i,
            direction_norm_sq: v.norm_sq(),
            direction: v,
        })
    }
}

/// Applies `steps` SGD steps, invoking `hook` after each one.
pub fn run_traced<F>(
    state: &mut SgdState,
    problem: &Problem,
    schedule: &StepSchedule,
    steps: u64,
    mut hook: F,
) -> Result<()>
where
    F: FnMut(&StepReport, &SgdState),
{
    for _ in 0..steps {
        let report = state.step(problem, schedule)?;
        hook(&report, state);
    }
    Ok(())
}

pub fn run(
    state: &mut SgdState,
    problem: &Problem,
    schedule: &StepSchedule,
    steps: u64,
) -> Result<()> {
    run_traced(state, problem, schedule, steps, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::losses::ComponentLoss;

    fn vec1(v: f64) -> DenseVector {
        DenseVector::from_vec(vec![v])
    }

    #[test]
    fn unbiasedness_by_enumeration() {
        let problem = Problem::new(
            vec![
                ComponentLoss::squared(vec1(1.0), 1.0),
                ComponentLoss::squared(vec1(2.0), -0.5),
            ],
            0.3,
        )
        .unwrap();
        let w = vec1(0.7);
        let mut mean = DenseVector::zeros(1);
        for i in 0..problem.n() {
            let mut v = problem.component(i).grad(&w);
            v.axpy(problem.lambda(), &w);
            mean.axpy(1.0, &v);
        }
        mean.scale(1.0 / problem.n() as f64);
        assert!((mean[0] - problem.full_gradient(&w)[0]).abs() < 1e-15);
    }

    #[test]
    fn zero_losses_contract_toward_origin() {
        // All phi_i identically zero: v = lambda w, a pure contraction.
        let q = SymMatrix::zeros(1);
        let loss = ComponentLoss::indefinite_quadratic(q, vec1(0.0)).unwrap();
        let problem = Problem::new(vec![loss], 0.5).unwrap();
        let schedule = StepSchedule::Constant(0.1);
        let mut state = SgdState::init(&problem, vec1(8.0), 0).unwrap();
        let mut prev = state.w()[0].abs();
        for _ in 0..50 {
            state.step(&problem, &schedule).unwrap();
            let cur = state.w()[0].abs();
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn single_component_is_deterministic_descent() {
        // n = 1: SGD is full gradient descent and converges monotonically on
        // a quadratic with a small enough constant step.
        let problem = Problem::new(vec![ComponentLoss::squared(vec1(1.0), 1.0)], 1.0).unwrap();
        let schedule = StepSchedule::Constant(0.4);
        let mut state = SgdState::init_zero(&problem, 123).unwrap();
        let mut prev = problem.objective(state.w());
        for _ in 0..100 {
            state.step(&problem, &schedule).unwrap();
            let cur = problem.objective(state.w());
            assert!(cur <= prev + 1e-15);
            prev = cur;
        }
        // Stationary point of P: (w - 1) + w = 0 -> w = 1/2.
        assert!((state.w()[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn decaying_schedule_shrinks() {
        let s = StepSchedule::Decaying(1.0);
        assert_eq!(s.at(0, 0.5), 1.0);
        assert_eq!(s.at(2, 0.5), 0.5);
        assert!(s.at(100, 0.5) < s.at(10, 0.5));
    }

    #[test]
    fn identical_seeds_identical_runs() {
        let problem = Problem::new(
            vec![
                ComponentLoss::squared(vec1(1.0), 1.0),
                ComponentLoss::squared(vec1(-1.0), 2.0),
                ComponentLoss::squared(vec1(0.5), -1.0),
            ],
            0.2,
        )
        .unwrap();
        let schedule = StepSchedule::Decaying(0.3);
        let mut a = SgdState::init_zero(&problem, 5).unwrap();
        let mut b = SgdState::init_zero(&problem, 5).unwrap();
        run(&mut a, &problem, &schedule, 300).unwrap();
        run(&mut b, &problem, &schedule, 300).unwrap();
        assert_eq!(a.w(), b.w());
    }
}
