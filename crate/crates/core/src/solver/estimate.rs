use super::{FitResult, RegressionProblem};
use crate::error::{domain, Error, Result};
use crate::optimize::bisect;
use nalgebra::DVector;

/// `f(v, γ) = Σ 1 / (1 + γq(q − 1)|v_i|^{q−2})`.
fn f_sum(beta: &DVector<f64>, gamma: f64, q: f64) -> f64 {
    let k = gamma * q * (q - 1.0);
    beta.iter()
        .map(|&b| {
            let a = b.abs();
            if q < 2.0 && a == 0.0 {
                0.0
            } else {
                1.0 / (1.0 + k * a.powf(q - 2.0))
            }
        })
        .sum()
}

/// Root of `λ/γ = 1 − f(β̂, γ)/n`.
///
/// The left side decreases and the right side increases in `γ`, so a sign
/// change is bracketed by expanding around `λ`.
pub fn gamma_hat(fit: &FitResult, lambda: f64, n: usize) -> Result<f64> {
    let q = fit.q;
    if !(q > 1.0) {
        return Err(domain(format!("gamma_hat requires q > 1, got {q}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("gamma_hat requires lambda > 0, got {lambda}")));
    }
    let nf = n as f64;
    let g = |gamma: f64| Ok(lambda / gamma - 1.0 + f_sum(&fit.beta, gamma, q) / nf);
    let (mut lo, mut hi) = (lambda * 1e-8, lambda * 1e8);
    let mut expansions = 0;
    while g(lo)? <= 0.0 || g(hi)? >= 0.0 {
        if expansions == 40 {
            return Err(Error::Numeric { context: "gamma_hat bracket".into(), residual: g(hi)? });
        }
        lo *= 1e-4;
        hi *= 1e4;
        expansions += 1;
    }
    // Bisect in log γ so the relative accuracy is uniform across the bracket.
    let lg = bisect(|t: f64| g(t.exp()), lo.ln(), hi.ln(), 0.0, 400)?;
    Ok(lg.exp())
}

/// `‖β̂‖₀` for `q = 1`, else `f(β̂, γ)`.
pub fn degrees_of_freedom(fit: &FitResult, gamma: Option<f64>) -> Result<f64> {
    if fit.q == 1.0 {
        return Ok(fit.support_size() as f64);
    }
    let gamma = gamma.ok_or_else(|| domain("degrees of freedom for q > 1 needs gamma"))?;
    Ok(f_sum(&fit.beta, gamma, fit.q))
}

fn df_of(problem: &RegressionProblem, fit: &FitResult) -> Result<f64> {
    if fit.q == 1.0 {
        return degrees_of_freedom(fit, None);
    }
    let gamma = match fit.gamma_hat {
        Some(g) => g,
        None => gamma_hat(fit, fit.lambda, problem.n())?,
    };
    degrees_of_freedom(fit, Some(gamma))
}

/// `τ̂² = ‖y − Xβ̂‖² / (n (1 − df/n)²)`, infinite for a saturated LASSO support.
pub fn tau_hat(problem: &RegressionProblem, fit: &FitResult) -> Result<f64> {
    let n = problem.n() as f64;
    if fit.q == 1.0 && fit.support_size() >= problem.n() {
        return Ok(f64::INFINITY);
    }
    if fit.q > 1.0 && fit.lambda == 0.0 {
        return Err(domain("tau_hat for q > 1 requires lambda > 0"));
    }
    let df = df_of(problem, fit)?;
    let shrink = 1.0 - df / n;
    if shrink <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(problem.residual(&fit.beta).norm_squared() / (n * shrink * shrink))
}

/// `β† = β̂ + Xᵀ(y − Xβ̂) / (1 − df/n)`.
pub fn debias(problem: &RegressionProblem, fit: &FitResult) -> Result<DVector<f64>> {
    if fit.beta.len() != problem.p() {
        return Err(domain("fit and problem dimensions differ"));
    }
    let df = if fit.q > 1.0 && fit.lambda == 0.0 { 0.0 } else { df_of(problem, fit)? };
    let shrink = 1.0 - df / problem.n() as f64;
    if shrink < 1e-6 {
        return Err(Error::Degenerate(format!("debiasing denominator {shrink:e} collapsed")));
    }
    Ok(&fit.beta + problem.x().tr_mul(&problem.residual(&fit.beta)) / shrink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn fit_with(beta: Vec<f64>, q: f64, lambda: f64) -> FitResult {
        FitResult {
            beta: DVector::from_vec(beta),
            q,
            lambda,
            passes: 0,
            kkt_residual: 0.0,
            tau_hat: None,
            gamma_hat: None,
            saturated: false,
        }
    }

    #[test]
    fn ridge_gamma_quadratic() {
        let fit = fit_with(vec![0.3, -1.0, 2.0, 0.0], 2.0, 1.0);
        let g = gamma_hat(&fit, 1.0, 4).unwrap();
        assert!((g - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-12);
        let resid = 1.0 / g - 1.0 + f_sum(&fit.beta, g, 2.0) / 4.0;
        assert!(resid.abs() <= 1e-10);
    }

    #[test]
    fn gamma_sign_change_brackets_root() {
        let fit = fit_with(vec![0.5, -0.1, 1.5, 0.0, 0.2], 1.5, 0.7);
        let g = gamma_hat(&fit, 0.7, 4).unwrap();
        let h = |x: f64| 0.7 / x - 1.0 + f_sum(&fit.beta, x, 1.5) / 4.0;
        assert!(h(g * 0.999) > 0.0 && h(g * 1.001) < 0.0);
        assert!(h(g).abs() <= 1e-10);
    }

    #[test]
    fn zero_fit_tau_hat() {
        let x = DMatrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64 * 0.1);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let pr = RegressionProblem::new(x, y.clone()).unwrap();
        let t = tau_hat(&pr, &fit_with(vec![0.0; 3], 1.0, 1.0)).unwrap();
        assert!((t - y.norm_squared() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn ridge_tau_hat_symbolic() {
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) % 4) as f64 * 0.25 - 0.3);
        let y = DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0, 0.0, -1.0]);
        let pr = RegressionProblem::new(x, y).unwrap();
        let fit = fit_with(vec![0.2, -0.4, 0.1], 2.0, 0.5);
        let g = gamma_hat(&fit, 0.5, 6).unwrap();
        // With f = p/(1 + 2γ) the root solves λ/γ = 1 − 3/(6(1 + 2γ)).
        let quad = |x: f64| 0.5 / x - 1.0 + 0.5 / (1.0 + 2.0 * x);
        assert!(quad(g).abs() < 1e-12);
        let shrink = 1.0 - 3.0 / (6.0 * (1.0 + 2.0 * g));
        let expected = pr.residual(&fit.beta).norm_squared() / (6.0 * shrink * shrink);
        assert!((tau_hat(&pr, &fit).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn saturated_support_is_infinite() {
        let pr = RegressionProblem::new(DMatrix::identity(2, 3), DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(tau_hat(&pr, &fit_with(vec![0.1, 0.2, 0.0], 1.0, 0.1)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn debias_identities() {
        let x = DMatrix::from_fn(5, 3, |i, j| ((i + j) % 3) as f64 - 1.0 + 0.1 * i as f64);
        let b = DVector::from_vec(vec![0.5, 0.0, -1.0]);
        let y = &x * &b;
        let pr = RegressionProblem::new(x.clone(), y.clone()).unwrap();
        let fit = fit_with(b.as_slice().to_vec(), 1.0, 0.1);
        assert_eq!(debias(&pr, &fit).unwrap(), b);
        let zero = fit_with(vec![0.0; 3], 1.0, 0.1);
        assert!((debias(&pr, &zero).unwrap() - x.tr_mul(&y)).amax() < 1e-15);
        let full = RegressionProblem::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 3.0])).unwrap();
        assert!(matches!(debias(&full, &fit_with(vec![0.5, 2.0], 1.0, 0.5)), Err(Error::Degenerate(_))));
    }

    proptest! {
        #[test]
        fn gamma_residual_certificate(
            beta in prop::collection::vec(-3.0f64..3.0, 1..30),
            q in 1.05f64..3.5,
            lambda in 0.01f64..10.0,
            extra in 0usize..40,
        ) {
            let n = beta.len() + extra + 1;
            let fit = fit_with(beta, q, lambda);
            let g = gamma_hat(&fit, lambda, n).unwrap();
            let resid = lambda / g - 1.0 + f_sum(&fit.beta, g, q) / n as f64;
            prop_assert!(resid.abs() <= 1e-10);
        }
    }
}
