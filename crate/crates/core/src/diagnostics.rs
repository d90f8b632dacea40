//! Convergence diagnostics built on a reference solution.
//!
//! Everything here measures distance to the optimum in two coordinates: the
//! mean squared pseudo-dual error (over the alpha table) and the squared
//! primal error of the iterate. Two weighted combinations of the pair act as
//! Lyapunov functions; their conditional expectation after one solver step
//! contracts by (1 - eta * lambda), and `expected_next_potential` computes
//! that expectation exactly by enumerating every possible component choice,
//! so the contraction can be asserted deterministically rather than
//! statistically.

use crate::error::{Error, Result};
use crate::losses::{ConvexityClass, Problem};
use crate::problems::ReferenceSolution;
use crate::sdca::{HyperParams, SolverState, StepReport};
use crate::vector::{pairwise_sum, DenseVector};

/// The two Lyapunov combinations, named for the convexity regime whose
/// contraction they certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lyapunov {
    /// dual_err / (2 L) + (lambda / 2) primal_err; contracts when every
    /// component is smooth and convex and eta <= 1 / (L + lambda n).
    EachConvex,
    /// (lambda / 2) (dual_err / L^2 + primal_err); contracts when only the
    /// average is convex and eta = min(lambda / (2 L^2), 1 / (2 lambda n)).
    AverageConvex,
}

/// Scalar fields of a snapshot that decay-rate fitting can select.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceField {
    DualErr,
    PrimalErr,
    LyapunovEach,
    LyapunovAvg,
    Suboptimality,
}

/// Per-iteration diagnostics row.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSnapshot {
    pub t: u64,
    /// (1/n) sum_j ||alpha_j - alpha*_j||^2
    pub dual_err: f64,
    /// ||w - w*||^2
    pub primal_err: f64,
    /// The average-convex Lyapunov value.
    pub lyapunov_avg: f64,
    /// The each-convex Lyapunov value.
    pub lyapunov_each: f64,
    /// P(w) - P(w*)
    pub suboptimality: f64,
    /// ||v||^2 of the step that produced this state, when one was taken.
    pub v_norm_sq: Option<f64>,
}

impl PotentialSnapshot {
    pub fn field(&self, field: TraceField) -> f64 {
        match field {
            TraceField::DualErr => self.dual_err,
            TraceField::PrimalErr => self.primal_err,
            TraceField::LyapunovEach => self.lyapunov_each,
            TraceField::LyapunovAvg => self.lyapunov_avg,
            TraceField::Suboptimality => self.suboptimality,
        }
    }

    pub fn lyapunov(&self, which: Lyapunov) -> f64 {
        match which {
            Lyapunov::EachConvex => self.lyapunov_each,
            Lyapunov::AverageConvex => self.lyapunov_avg,
        }
    }
}

fn dual_err(alphas: &[DenseVector], alpha_star: &[DenseVector]) -> f64 {
    let terms: Vec<f64> = alphas
        .iter()
        .zip(alpha_star)
        .map(|(a, s)| a.dist_sq(s))
        .collect();
    pairwise_sum(&terms) / alphas.len() as f64
}

/// The two base potentials (mean squared dual error, squared primal error)
/// at a state, without the objective evaluation a full snapshot carries.
pub fn base_potentials(state: &SolverState, reference: &ReferenceSolution) -> (f64, f64) {
    (
        dual_err(state.alphas(), &reference.alpha_star),
        state.w().dist_sq(&reference.w_star),
    )
}

/// The chosen Lyapunov value at a state.
pub fn lyapunov_at(
    state: &SolverState,
    problem: &Problem,
    reference: &ReferenceSolution,
    which: Lyapunov,
) -> f64 {
    let (a, b) = base_potentials(state, reference);
    let lambda = problem.lambda();
    let big_l = problem.smoothness();
    match which {
        Lyapunov::EachConvex => a / (2.0 * big_l) + 0.5 * lambda * b,
        Lyapunov::AverageConvex => 0.5 * lambda * (a / (big_l * big_l) + b),
    }
}

/// Computes every potential at the current state. `last_step` supplies the
/// squared update norm when the state was just produced by a step.
pub fn snapshot(
    state: &SolverState,
    problem: &Problem,
    reference: &ReferenceSolution,
    last_step: Option<&StepReport>,
) -> PotentialSnapshot {
    let a = dual_err(state.alphas(), &reference.alpha_star);
    let b = state.w().dist_sq(&reference.w_star);
    let lambda = problem.lambda();
    let big_l = problem.smoothness();
    PotentialSnapshot {
        t: state.iteration(),
        dual_err: a,
        primal_err: b,
        lyapunov_avg: 0.5 * lambda * (a / (big_l * big_l) + b),
        lyapunov_each: a / (2.0 * big_l) + 0.5 * lambda * b,
        suboptimality: problem.objective(state.w()) - reference.p_star,
        v_norm_sq: last_step.map(|r| r.direction_norm_sq),
    }
}

/// Guard on exact enumeration; larger problems should sample instead.
pub const ENUMERATION_GUARD: usize = 10_000;

/// The exact conditional expectation of the chosen Lyapunov potential after
/// one solver step from `state`: every component index is simulated with
/// probability 1/n and the results are averaged (pairwise, so the value does
/// not depend on evaluation order). This is precisely the quantity the
/// contraction bounds control.
pub fn expected_next_potential(
    state: &SolverState,
    problem: &Problem,
    reference: &ReferenceSolution,
    hp: &HyperParams,
    which: Lyapunov,
) -> Result<f64> {
    let n = problem.n();
    if n > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard {
            n,
            limit: ENUMERATION_GUARD,
        });
    }
    let mut outcomes = Vec::with_capacity(n);
    for i in 0..n {
        let mut branch = state.clone();
        branch.step_at(problem, hp, i)?;
        outcomes.push(lyapunov_at(&branch, problem, reference, which));
    }
    Ok(pairwise_sum(&outcomes) / n as f64)
}

/// Per-iteration squared update norms plus their means over consecutive
/// windows (the final window may be partial).
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub per_iteration: Vec<f64>,
    pub window_means: Vec<f64>,
    pub window: usize,
}

pub const DEFAULT_VARIANCE_WINDOW: usize = 50;

pub fn variance_profile(v_norms_sq: &[f64], window: usize) -> VarianceProfile {
    assert!(window >= 1, "variance window must be at least 1");
    let window_means = v_norms_sq
        .chunks(window)
        .map(|chunk| pairwise_sum(chunk) / chunk.len() as f64)
        .collect();
    VarianceProfile {
        per_iteration: v_norms_sq.to_vec(),
        window_means,
        window,
    }
}

/// Self-boundedness of the centered components: returns
/// lhs = (1/n) sum_i ||grad phi_i(w) - grad phi_i(w*)||^2 and
/// rhs = 2 L (P(w) - P(w*) - (lambda/2) ||w - w*||^2).
/// The caller asserts lhs <= rhs (+ tolerance); the inequality needs every
/// component to be convex, so average-convex-only problems are rejected.
pub fn check_self_bound(
    problem: &Problem,
    reference: &ReferenceSolution,
    w: &DenseVector,
) -> Result<(f64, f64)> {
    if problem.convexity() != ConvexityClass::EachConvex {
        return Err(Error::EachConvexRequired);
    }
    let terms: Vec<f64> = problem
        .components()
        .iter()
        .zip(&reference.alpha_star)
        .map(|(c, alpha_star)| {
            // alpha*_i = -grad phi_i(w*), so the difference of gradients is
            // grad phi_i(w) + alpha*_i.
            let mut diff = c.grad(w);
            diff.axpy(1.0, alpha_star);
            diff.norm_sq()
        })
        .collect();
    let lhs = pairwise_sum(&terms) / problem.n() as f64;
    let gap = problem.objective(w) - reference.p_star
        - 0.5 * problem.lambda() * w.dist_sq(&reference.w_star);
    let rhs = 2.0 * problem.smoothness() * gap;
    Ok((lhs, rhs))
}

/// Least-squares slope of log(value) against iteration index, over (t, value)
/// pairs with positive values.
pub fn fit_log_decay(points: &[(u64, f64)]) -> Result<f64> {
    let filtered: Vec<(f64, f64)> = points
        .iter()
        .take_while(|(_, v)| *v > 0.0)
        .map(|&(t, v)| (t as f64, v.ln()))
        .collect();
    if filtered.len() < 2 {
        return Err(Error::TooFewPositiveSamples {
            found: filtered.len(),
        });
    }
    let n = filtered.len() as f64;
    let mean_t = filtered.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = filtered.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in &filtered {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::TooFewPositiveSamples { found: 1 });
    }
    Ok(num / den)
}

/// Fits the empirical per-iteration log-decay of a snapshot field. The fit
/// runs over the longest positive prefix; a geometric sequence q^t returns
/// exactly log q and a constant sequence returns zero.
pub fn fit_decay_rate(snapshots: &[PotentialSnapshot], field: TraceField) -> Result<f64> {
    let points: Vec<(u64, f64)> = snapshots.iter().map(|s| (s.t, s.field(field))).collect();
    fit_log_decay(&points)
}

/// Measured and predicted single-step changes of the two base potentials.
///
/// With u = -grad phi_i(w_before) and v the reported direction, the dual
/// potential must move by exactly
///   eta lambda (-||alpha_i - alpha*_i||^2 + ||u - alpha*_i||^2
///               - (1 - beta) ||v||^2)
/// and the primal one by
///   -2 eta (w_before - w*)^T v + eta^2 ||v||^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionCheck {
    pub dual_delta: f64,
    pub dual_delta_predicted: f64,
    pub primal_delta: f64,
    pub primal_delta_predicted: f64,
}

impl EvolutionCheck {
    /// Largest absolute prediction error, scaled against the potential that
    /// moved.
    pub fn max_relative_error(&self, dual_scale: f64, primal_scale: f64) -> f64 {
        let dual = (self.dual_delta - self.dual_delta_predicted).abs() / dual_scale.max(1.0);
        let primal =
            (self.primal_delta - self.primal_delta_predicted).abs() / primal_scale.max(1.0);
        dual.max(primal)
    }
}

pub fn evolution_check(
    before: &SolverState,
    after: &SolverState,
    report: &StepReport,
    problem: &Problem,
    reference: &ReferenceSolution,
    hp: &HyperParams,
) -> EvolutionCheck {
    let i = report.index;
    let alpha_star = &reference.alpha_star[i];
    let alpha_before = before.alpha(i);
    // Recompute the component gradient at the pre-step iterate; grad is pure,
    // so this matches the value used inside the step bit for bit.
    let u = problem.component(i).grad(before.w()).scaled(-1.0);
    let v_norm_sq = report.direction_norm_sq;

    let n = problem.n() as f64;
    let dual_delta = (after.alpha(i).dist_sq(alpha_star) - alpha_before.dist_sq(alpha_star)) / n;
    let dual_delta_predicted = hp.eta()
        * hp.lambda()
        * (-alpha_before.dist_sq(alpha_star) + u.dist_sq(alpha_star)
            - (1.0 - hp.beta()) * v_norm_sq);

    let primal_delta =
        after.w().dist_sq(&reference.w_star) - before.w().dist_sq(&reference.w_star);
    let gap = before.w().sub(&reference.w_star);
    let primal_delta_predicted =
        -2.0 * hp.eta() * gap.dot(&report.direction) + hp.eta() * hp.eta() * v_norm_sq;

    EvolutionCheck {
        dual_delta,
        dual_delta_predicted,
        primal_delta,
        primal_delta_predicted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::ComponentLoss;
    use crate::problems::solve_reference;

    fn vec1(v: f64) -> DenseVector {
        DenseVector::from_vec(vec![v])
    }

    fn one_dim_ridge() -> (Problem, ReferenceSolution) {
        let problem = Problem::new(vec![ComponentLoss::squared(vec1(1.0), 1.0)], 1.0).unwrap();
        let reference = solve_reference(&problem).unwrap();
        (problem, reference)
    }

    #[test]
    fn snapshot_at_optimum_is_zero() {
        let (problem, reference) = one_dim_ridge();
        let state =
            SolverState::init(&problem, reference.alpha_star.clone(), 0).unwrap();
        let snap = snapshot(&state, &problem, &reference, None);
        assert_eq!(snap.dual_err, 0.0);
        assert_eq!(snap.primal_err, 0.0);
        assert_eq!(snap.lyapunov_each, 0.0);
        assert_eq!(snap.lyapunov_avg, 0.0);
        assert!(snap.suboptimality.abs() < 1e-15);
        assert_eq!(snap.v_norm_sq, None);
    }

    #[test]
    fn snapshot_hand_example() {
        // Zero start on the 1-d ridge instance: w* = alpha* = 1/2, L = 1,
        // lambda = 1, so every potential equals 1/4.
        let (problem, reference) = one_dim_ridge();
        let state = SolverState::init_zero(&problem, 0).unwrap();
        let snap = snapshot(&state, &problem, &reference, None);
        assert_eq!(snap.dual_err, 0.25);
        assert_eq!(snap.primal_err, 0.25);
        assert_eq!(snap.lyapunov_avg, 0.25);
        assert_eq!(snap.lyapunov_each, 0.25);
        assert_eq!(snap.suboptimality, 0.25);
    }

    #[test]
    fn potentials_scale_quadratically() {
        let (problem, reference) = one_dim_ridge();
        let near = SolverState::init(&problem, vec![vec1(0.25)], 0).unwrap();
        let far = SolverState::init(&problem, vec![vec1(0.0)], 0).unwrap();
        // alpha distances to alpha* = 0.5 are 0.25 and 0.5: doubling the
        // offset quadruples both base potentials.
        let s_near = snapshot(&near, &problem, &reference, None);
        let s_far = snapshot(&far, &problem, &reference, None);
        assert!((s_far.dual_err - 4.0 * s_near.dual_err).abs() < 1e-15);
        assert!((s_far.primal_err - 4.0 * s_near.primal_err).abs() < 1e-15);
    }

    #[test]
    fn expected_next_potential_hand_example() {
        // n = 1: the expectation is the single deterministic outcome, and the
        // one step lands on the optimum.
        let (problem, reference) = one_dim_ridge();
        let hp = HyperParams::new(1.0, 0.5, 1).unwrap();
        let state = SolverState::init_zero(&problem, 0).unwrap();
        let expected =
            expected_next_potential(&state, &problem, &reference, &hp, Lyapunov::EachConvex)
                .unwrap();
        assert_eq!(expected, 0.0);
        let current = snapshot(&state, &problem, &reference, None).lyapunov_each;
        assert!(expected <= (1.0 - hp.eta() * hp.lambda()) * current);
    }

    #[test]
    fn enumeration_guard_trips_on_large_problems() {
        let components: Vec<_> = (0..ENUMERATION_GUARD + 1)
            .map(|i| ComponentLoss::squared(vec1(1.0), i as f64 / 1e4))
            .collect();
        let n = components.len();
        let problem = Problem::new(components, 1.0).unwrap();
        let reference = solve_reference(&problem).unwrap();
        let hp = HyperParams::new(1.0, 1e-6, n).unwrap();
        let state = SolverState::init_zero(&problem, 0).unwrap();
        let err = expected_next_potential(&state, &problem, &reference, &hp, Lyapunov::EachConvex)
            .unwrap_err();
        assert!(matches!(err, Error::EnumerationGuard { .. }));
    }

    #[test]
    fn expected_next_potential_at_optimum_is_zero() {
        let (problem, reference) = one_dim_ridge();
        let hp = HyperParams::new(1.0, 0.25, 1).unwrap();
        let state = SolverState::init(&problem, reference.alpha_star.clone(), 0).unwrap();
        for which in [Lyapunov::EachConvex, Lyapunov::AverageConvex] {
            let expected =
                expected_next_potential(&state, &problem, &reference, &hp, which).unwrap();
            assert_eq!(expected, 0.0);
        }
    }

    #[test]
    fn variance_profile_windows() {
        let zeros = vec![0.0; 10];
        let profile = variance_profile(&zeros, 4);
        assert_eq!(profile.window_means, vec![0.0, 0.0, 0.0]);
        let ramp: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let profile = variance_profile(&ramp, 3);
        assert_eq!(profile.window_means, vec![1.0, 4.0]);
        assert_eq!(profile.per_iteration, ramp);
    }

    #[test]
    fn run_from_optimum_has_identically_zero_variance() {
        // On the 1-d instance the fixed point is dyadic, so every update
        // direction from (w*, alpha*) is exactly zero.
        let (problem, reference) = one_dim_ridge();
        let hp = HyperParams::new(1.0, 0.5, 1).unwrap();
        let mut state = SolverState::init(&problem, reference.alpha_star.clone(), 0).unwrap();
        let mut norms = Vec::new();
        crate::sdca::run_traced(&mut state, &problem, &hp, 10, |report, _| {
            norms.push(report.direction_norm_sq);
        })
        .unwrap();
        let profile = variance_profile(&norms, DEFAULT_VARIANCE_WINDOW);
        assert_eq!(profile.per_iteration, vec![0.0; 10]);
        assert_eq!(profile.window_means, vec![0.0]);
    }

    #[test]
    fn self_bound_hand_example_is_tight() {
        // 1-d ridge at w = 0: both sides equal 1/4.
        let (problem, reference) = one_dim_ridge();
        let (lhs, rhs) = check_self_bound(&problem, &reference, &vec1(0.0)).unwrap();
        assert_eq!(lhs, 0.25);
        assert_eq!(rhs, 0.25);
        let (lhs, rhs) = check_self_bound(&problem, &reference, &reference.w_star).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn self_bound_rejects_average_convex_problems() {
        let q1 = crate::linalg::SymMatrix::from_rows(&[vec![1.0]]).unwrap();
        let q2 = crate::linalg::SymMatrix::from_rows(&[vec![-0.5]]).unwrap();
        let problem = Problem::new(
            vec![
                ComponentLoss::indefinite_quadratic(q1, vec1(0.1)).unwrap(),
                ComponentLoss::indefinite_quadratic(q2, vec1(-0.2)).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let reference = solve_reference(&problem).unwrap();
        assert!(matches!(
            check_self_bound(&problem, &reference, &vec1(0.3)),
            Err(Error::EachConvexRequired)
        ));
    }

    #[test]
    fn fit_recovers_exact_geometric_decay() {
        let q: f64 = 0.9;
        let snapshots: Vec<PotentialSnapshot> = (0..20)
            .map(|t| PotentialSnapshot {
                t,
                dual_err: q.powi(t as i32),
                primal_err: 1.0,
                lyapunov_avg: 0.0,
                lyapunov_each: 0.0,
                suboptimality: 0.0,
                v_norm_sq: None,
            })
            .collect();
        let rate = fit_decay_rate(&snapshots, TraceField::DualErr).unwrap();
        assert!((rate - q.ln()).abs() < 1e-12);
        // The constant field fits to slope zero.
        let rate = fit_decay_rate(&snapshots, TraceField::PrimalErr).unwrap();
        assert!(rate.abs() < 1e-14);
    }

    #[test]
    fn fit_uses_positive_prefix_and_rejects_tiny_input() {
        let mk = |t: u64, v: f64| PotentialSnapshot {
            t,
            dual_err: v,
            primal_err: 0.0,
            lyapunov_avg: 0.0,
            lyapunov_each: 0.0,
            suboptimality: 0.0,
            v_norm_sq: None,
        };
        // Decay hits zero at t = 3; the fit covers t = 0..2 only.
        let snapshots: Vec<_> = vec![mk(0, 1.0), mk(1, 0.5), mk(2, 0.25), mk(3, 0.0), mk(4, 8.0)];
        let rate = fit_decay_rate(&snapshots, TraceField::DualErr).unwrap();
        assert!((rate - 0.5f64.ln()).abs() < 1e-12);
        let too_short = vec![mk(0, 1.0), mk(1, 0.0)];
        assert!(matches!(
            fit_decay_rate(&too_short, TraceField::DualErr),
            Err(Error::TooFewPositiveSamples { found: 1 })
        ));
    }

    #[test]
    fn evolution_identities_on_hand_step() {
        let (problem, reference) = one_dim_ridge();
        let hp = HyperParams::new(1.0, 0.5, 1).unwrap();
        let before = SolverState::init_zero(&problem, 0).unwrap();
        let mut after = before.clone();
        let report = after.step_at(&problem, &hp, 0).unwrap();
        let check = evolution_check(&before, &after, &report, &problem, &reference, &hp);
        // Post-step dual error is zero, pre-step is 1/4.
        assert!((check.dual_delta + 0.25).abs() < 1e-15);
        assert!((check.dual_delta - check.dual_delta_predicted).abs() < 1e-15);
        assert!((check.primal_delta - check.primal_delta_predicted).abs() < 1e-15);
    }
}
