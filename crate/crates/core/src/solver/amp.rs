use super::{FitResult, RegressionProblem};
use crate::error::{domain, Error, Result};
use crate::prox::{deriv_u_at, soft_threshold, solve_stationary};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpOptions {
    pub max_iters: usize,
    /// Stop once `‖β^{t+1} − β^t‖₂ / √p` falls below this.
    pub tol: f64,
}

impl Default for AmpOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8 }
    }
}

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

/// Approximate message passing for bridge regression at threshold multiplier `α`.
///
/// The effective noise level is estimated each step as `‖z^t‖₂/√n`. The
/// returned fit carries the `λ` implied by the limit,
/// `λ = χ (1 − ⟨η'⟩/δ)`, and the final `τ` in `tau_hat`.
pub fn fit_amp(problem: &RegressionProblem, q: f64, alpha: f64, opts: &AmpOptions) -> Result<(FitResult, Vec<f64>)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    let (n, p) = (problem.n(), problem.p());
    let x = problem.x();
    let delta = n as f64 / p as f64;
    let mut beta = DVector::<f64>::zeros(p);
    let mut z = problem.y().clone();
    let mut tau = z.norm() / (n as f64).sqrt();
    let tau0 = tau;
    let mut taus = vec![tau];
    let mut chi = alpha * tau.powf(2.0 - q);
    let mut mean_deriv = 0.0;
    let mut iters = 0;
    if tau == 0.0 {
        let fit = FitResult { beta, q, lambda: 0.0, passes: 0, kkt_residual: 0.0, tau_hat: Some(0.0), gamma_hat: None, saturated: false };
        return Ok((fit, taus));
    }
    while iters < opts.max_iters {
        chi = alpha * tau.powf(2.0 - q);
        let pseudo = x.tr_mul(&z) + &beta;
        let mut next = DVector::zeros(p);
        let mut dsum = 0.0;
        for j in 0..p {
            let e = prox(pseudo[j], chi, q)?;
            next[j] = e;
            dsum += if q == 1.0 { if e != 0.0 { 1.0 } else { 0.0 } } else { deriv_u_at(e, chi, q) };
        }
        mean_deriv = dsum / p as f64;
        let step = (&next - &beta).norm() / (p as f64).sqrt();
        z = problem.y() - x * &next + &z * (mean_deriv / delta);
        beta = next;
        tau = z.norm() / (n as f64).sqrt();
        taus.push(tau);
        iters += 1;
        if !tau.is_finite() || tau > 1e6 * tau0 {
            return Err(Error::Instability(format!("AMP noise level grew to {tau:e} from {tau0:e} after {iters} iterations")));
        }
        if step <= opts.tol {
            break;
        }
    }
    let lambda = chi * (1.0 - mean_deriv / delta);
    let kkt = if lambda > 0.0 { problem.kkt_residual(&beta, q, lambda) } else { f64::NAN };
    let saturated = q == 1.0 && beta.iter().filter(|b| **b != 0.0).count() >= n;
    let fit = FitResult { beta, q, lambda, passes: iters, kkt_residual: kkt, tau_hat: Some(tau), gamma_hat: None, saturated };
    Ok((fit, taus))
}
