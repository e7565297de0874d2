//! Damped least-squares (Levenberg–Marquardt) solver.
//!
//! One engine serves both curve fitting and the joint sensor calibration:
//! problems implement [`LeastSquaresProblem`] and the solver owns the damping
//! schedule, step acceptance, and convergence bookkeeping.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A residual/jacobian pair over a parameter vector.
pub trait LeastSquaresProblem {
    /// Number of stacked residuals.
    fn residual_len(&self) -> usize;
    /// Number of free parameters.
    fn param_len(&self) -> usize;
    /// Writes residuals at `params` into `out` (length `residual_len()`).
    fn residuals(&self, params: &DVector<f64>, out: &mut DVector<f64>) -> Result<()>;
    /// Writes the jacobian ∂residual/∂param at `params` into `out`
    /// (`residual_len() × param_len()`).
    fn jacobian(&self, params: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()>;
}

/// Solver options. The damping factor starts at `lambda_init`, multiplies by
/// 10 on every rejected step, and divides by 10 (floored at 1e-12) on every
/// accepted step.
#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iters: usize,
    pub lambda_init: f64,
    /// Stop when an accepted step decreases the cost by less than this
    /// fraction of the current cost.
    pub cost_tol: f64,
    /// Stop when the gradient infinity norm falls below this.
    pub grad_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iters: 200,
            lambda_init: 1e-3,
            cost_tol: 1e-12,
            grad_tol: 1e-10,
        }
    }
}

/// Solver result.
#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: DVector<f64>,
    /// Final sum of squared residuals.
    pub cost: f64,
    /// Outer iterations performed.
    pub iterations: usize,
    /// True when a convergence tolerance was met (rather than the iteration
    /// cap or a stall).
    pub converged: bool,
}

const LAMBDA_MAX: f64 = 1e14;
const LAMBDA_MIN: f64 = 1e-12;

/// Minimizes ‖residuals(p)‖² from `init`.
///
/// Trial steps solve (JᵀJ + λ·diag(JᵀJ)) δ = −Jᵀr; steps that fail to
/// decrease the cost (or produce non-finite residuals) are rejected and the
/// damping raised. Persistent singularity of the damped normal equations
/// surfaces as [`Error::SingularNormalEquations`]; a non-finite residual at
/// `init` as [`Error::NonFiniteResidual`].
pub fn levenberg_marquardt(
    problem: &impl LeastSquaresProblem,
    init: DVector<f64>,
    opts: &LmOptions,
) -> Result<LmOutcome> {
    let n_res = problem.residual_len();
    let n_par = problem.param_len();
    assert_eq!(init.len(), n_par, "init length must match param_len()");

    let mut params = init;
    let mut r = DVector::zeros(n_res);
    problem.residuals(&params, &mut r)?;
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteResidual);
    }
    let mut cost = r.dot(&r);

    let mut jac = DMatrix::zeros(n_res, n_par);
    let mut r_trial = DVector::zeros(n_res);
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        problem.jacobian(&params, &mut jac)?;
        if !jac.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteResidual);
        }
        let gradient = jac.transpose() * &r;
        if gradient.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        let hessian = jac.transpose() * &jac;

        let mut accepted = false;
        let mut last_solve_failed = false;
        while lambda < LAMBDA_MAX {
            // Marquardt scaling with a floor so zero-curvature directions
            // still receive some damping.
            let mut damped = hessian.clone();
            for i in 0..n_par {
                let d = hessian[(i, i)].max(1e-300);
                damped[(i, i)] += lambda * d;
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&(-&gradient)),
                None => {
                    last_solve_failed = true;
                    lambda = bump(lambda);
                    continue;
                }
            };
            last_solve_failed = false;
            let trial = &params + &step;
            if problem.residuals(&trial, &mut r_trial).is_err()
                || !r_trial.iter().all(|v| v.is_finite())
            {
                lambda = bump(lambda);
                continue;
            }
            let cost_trial = r_trial.dot(&r_trial);
            if cost_trial <= cost {
                let rel_decrease = (cost - cost_trial) / cost.max(1e-300);
                params = trial;
                std::mem::swap(&mut r, &mut r_trial);
                cost = cost_trial;
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
                accepted = true;
                if rel_decrease < opts.cost_tol {
                    converged = true;
                }
                break;
            }
            lambda = bump(lambda);
        }

        if !accepted {
            if last_solve_failed {
                return Err(Error::SingularNormalEquations);
            }
            // No decreasing step exists at machine precision: stalled.
            break;
        }
        if converged {
            break;
        }
    }

    Ok(LmOutcome { params, cost, iterations, converged })
}

fn bump(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        LAMBDA_MIN
    } else {
        lambda * 10.0
    }
}
