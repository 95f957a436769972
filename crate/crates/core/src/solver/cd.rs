use super::{FitResult, RegressionProblem};
use crate::error::{domain, Error, Result};
use crate::prox::{soft_threshold, solve_stationary};
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq)]
pub struct CdOptions {
    /// Stop once the largest coordinate change is below `tol · (1 + ‖β‖∞)`.
    pub tol: f64,
    pub max_passes: usize,
    pub warm_start: Option<DVector<f64>>,
    /// Accepted KKT residual relative to `1 + ‖Xᵀy‖∞`.
    pub kkt_tol: f64,
    /// Record the objective after every pass.
    pub trace_objective: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_passes: 20_000, warm_start: None, kkt_tol: 1e-6, trace_objective: false }
    }
}

/// Full passes after which a LASSO support of size `≥ n` ends the fit as saturated.
const SATURATION_PASSES: usize = 10;

/// Scalar prox that skips validation; callers guarantee `χ ≥ 0` and `q ≥ 1`.
#[inline]
fn prox(u: f64, chi: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        Ok(soft_threshold(u, chi))
    } else if q == 2.0 {
        Ok(u / (1.0 + 2.0 * chi))
    } else if u == 0.0 || chi == 0.0 {
        Ok(u)
    } else {
        Ok(solve_stationary(u.abs(), chi * q, q)?.copysign(u))
    }
}

/// Cyclic coordinate descent with an active-set inner loop.
///
/// A LASSO fit whose support still has `n` or more entries after a few full
/// passes is returned early with `saturated` set and no KKT guarantee.
///
/// Returns the fit and, when requested, the objective after each pass.
pub fn fit_coordinate_descent(problem: &RegressionProblem, q: f64, lambda: f64, opts: &CdOptions) -> Result<(FitResult, Vec<f64>)> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    let (n, p) = (problem.n(), problem.p());
    let x = problem.x();
    let mut beta = match &opts.warm_start {
        Some(w) if w.len() == p => w.clone(),
        Some(w) => return Err(domain(format!("warm start has length {}, expected {p}", w.len()))),
        None => DVector::zeros(p),
    };
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut r = problem.residual(&beta);
    let mut trace = Vec::new();

    let update = |j: usize, beta: &mut DVector<f64>, r: &mut DVector<f64>| -> Result<f64> {
        let nj = norms[j];
        if nj == 0.0 {
            let old = beta[j];
            beta[j] = 0.0;
            return Ok(old.abs());
        }
        let col = x.column(j);
        let old = beta[j];
        let u = old + col.dot(r) / nj;
        let new = prox(u, lambda / nj, q)?;
        let diff = new - old;
        if diff != 0.0 {
            r.axpy(-diff, &col, 1.0);
            beta[j] = new;
        }
        Ok(diff.abs())
    };

    let mut passes = 0;
    let mut converged = false;
    while passes < opts.max_passes {
        let mut change: f64 = 0.0;
        for j in 0..p {
            change = change.max(update(j, &mut beta, &mut r)?);
        }
        passes += 1;
        if opts.trace_objective {
            trace.push(problem.objective(&beta, q, lambda));
        }
        if change <= opts.tol * (1.0 + beta.amax()) {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        if q == 1.0 && active.len() >= n && passes >= SATURATION_PASSES {
            let kkt = problem.kkt_residual(&beta, q, lambda);
            let fit = FitResult { beta, q, lambda, passes, kkt_residual: kkt, tau_hat: None, gamma_hat: None, saturated: true };
            return Ok((fit, trace));
        }
        if active.len() == p {
            continue;
        }
        while passes < opts.max_passes {
            let mut change: f64 = 0.0;
            for &j in &active {
                change = change.max(update(j, &mut beta, &mut r)?);
            }
            passes += 1;
            if opts.trace_objective {
                trace.push(problem.objective(&beta, q, lambda));
            }
            if change <= opts.tol * (1.0 + beta.amax()) {
                break;
            }
        }
    }
    let kkt = problem.kkt_residual(&beta, q, lambda);
    let limit = opts.kkt_tol * (1.0 + problem.lambda_max());
    if kkt > limit {
        return Err(Error::Numeric {
            context: format!("coordinate descent (q = {q}, lambda = {lambda}, {passes} passes, converged = {converged})"),
            residual: kkt,
        });
    }
    let saturated = q == 1.0 && beta.iter().filter(|b| **b != 0.0).count() >= n;
    let fit = FitResult { beta, q, lambda, passes, kkt_residual: kkt, tau_hat: None, gamma_hat: None, saturated };
    Ok((fit, trace))
}
