use super::cd::{fit_coordinate_descent, CdOptions};
use super::estimate::{gamma_hat, tau_hat};
use super::{FitResult, RegressionProblem};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    /// Points per search region.
    pub grid_size: usize,
    /// Lower end of the first region.
    pub initial_low: f64,
    /// Stop when the optima of two consecutive regions differ by at most this.
    pub stability: f64,
    pub max_rounds: usize,
    pub cd: CdOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { grid_size: 15, initial_low: 0.1, stability: 1e-6, max_rounds: 25, cd: CdOptions::default() }
    }
}

/// Fits at `λ` and attaches `τ̂` (and `γ̂` for `q > 1`).
fn fit_with_tau(problem: &RegressionProblem, q: f64, lambda: f64, cd: &CdOptions) -> Result<FitResult> {
    let (mut fit, _) = fit_coordinate_descent(problem, q, lambda, cd)?;
    if q > 1.0 && lambda > 0.0 {
        fit.gamma_hat = Some(gamma_hat(&fit, lambda, problem.n())?);
    }
    fit.tau_hat = Some(tau_hat(problem, &fit)?.sqrt());
    Ok(fit)
}

/// Adaptive grid search for the `λ` minimizing `τ̂²`.
///
/// Each region `[a, b]` is scanned in descending order with warm starts. An
/// optimum on the lower edge moves the region to `[a/10, a]`, one on the upper
/// edge to `[b, b + Δ]` with `Δ = ½‖Xᵀy‖∞`. The best `λ` seen overall is
/// returned together with its fit.
pub fn tune_lambda(problem: &RegressionProblem, q: f64, opts: &TuneOptions) -> Result<(f64, FitResult)> {
    if opts.grid_size < 3 {
        return Err(domain("lambda grid needs at least 3 points"));
    }
    if !(q >= 1.0) {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    let window = 0.5 * problem.lambda_max();
    if !(window > 0.0) {
        return Err(Error::Degenerate("X'y is zero; every lambda gives the zero fit".into()));
    }
    let mut a = opts.initial_low.min(0.5 * window);
    let mut b = window;
    let m = opts.grid_size;
    let mut best: Option<(f64, f64, FitResult)> = None;
    let mut warm: Option<nalgebra::DVector<f64>> = None;
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;

    for round in 1..=opts.max_rounds {
        let mut round_best: Option<(usize, f64, f64)> = None;
        for k in (0..m).rev() {
            let lambda = a + (b - a) * k as f64 / (m - 1) as f64;
            let cd = CdOptions { warm_start: warm.clone(), ..opts.cd.clone() };
            let fit = match fit_with_tau(problem, q, lambda, &cd) {
                Ok(fit) => fit,
                // A LASSO fit that stalls at tiny λ is treated like a saturated one.
                Err(Error::Numeric { .. }) if q == 1.0 => continue,
                Err(e) => return Err(e),
            };
            let t2 = fit.tau_hat.map_or(f64::INFINITY, |t| t * t);
            warm = Some(fit.beta.clone());
            if round_best.is_none_or(|(_, _, v)| t2 < v) {
                round_best = Some((k, lambda, t2));
            }
            if best.as_ref().is_none_or(|(_, v, _)| t2 < *v) {
                best = Some((lambda, t2, fit));
            }
        }
        let (k, lambda, t2) = round_best.unwrap_or((0, a, f64::INFINITY));
        trace.push((lambda, t2));
        if !t2.is_finite() {
            // Every point saturated: move toward larger penalties.
            a = b;
            b += window;
            previous = None;
            continue;
        }
        if let Some(prev) = previous {
            if (lambda - prev).abs() <= opts.stability {
                break;
            }
        }
        previous = Some(lambda);
        if k == 0 {
            b = a;
            a /= 10.0;
        } else if k == m - 1 {
            a = b;
            b += window;
        } else {
            break;
        }
        if round == opts.max_rounds {
            return Err(Error::SearchFailure { rounds: trace.len(), trace });
        }
    }
    match best {
        Some((lambda, t2, fit)) if t2.is_finite() => Ok((lambda, fit)),
        _ => Err(Error::SearchFailure { rounds: trace.len(), trace }),
    }
}
