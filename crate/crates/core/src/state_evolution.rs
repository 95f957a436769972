//! State evolution for bridge regression.
//!
//! For a penalty level `λ` the pair `(α, τ)` solves
//!
//! ```text
//! τ² = σ² + E(η_q(B + τZ; ατ^{2−q}) − B)² / δ
//! λ  = ατ^{2−q} (1 − E η_q'(B + τZ; ατ^{2−q}) / δ)
//! ```
//!
//! and the optimally tuned point satisfies `τ*² = σ² + min_α risk(α, τ*) / δ`.

use crate::error::{domain, Error, Result};
use crate::normal::{cdf, pdf, two_sided_tail};
use crate::optimize::{brent_root, golden_section};
use crate::prior::{QuadratureRule, SignalPrior};
use crate::prox::{deriv_chi_at, deriv_u_at, solve_stationary};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Asymptotic model parameters: `n/p → δ`, noise level `σ`, bridge exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub sigma: f64,
    pub q: f64,
}

impl ModelParams {
    pub fn new(delta: f64, sigma: f64, q: f64) -> Result<Self> {
        let model = Self { delta, sigma, q };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(domain(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(domain(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(domain(format!("q must be >= 1, got {}", self.q)));
        }
        Ok(())
    }

    pub fn with_q(&self, q: f64) -> Self {
        Self { q, ..*self }
    }
}

/// A solved state-evolution point. `alpha` and `lambda` are `+∞` when the
/// optimal estimator is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SEFixedPoint {
    pub q: f64,
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
    pub amse: f64,
}

impl SEFixedPoint {
    /// Effective threshold `χ = ατ^{2−q}` used by the scalar channel.
    pub fn chi(&self) -> f64 {
        effective_chi(self.alpha, self.tau, self.q)
    }
}

pub(crate) fn effective_chi(alpha: f64, tau: f64, q: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else if q == 2.0 {
        alpha
    } else {
        alpha * tau.powf(2.0 - q)
    }
}

pub(crate) fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(QuadratureRule::default)
}

const ALPHA_SCAN_LO: f64 = -6.0;
const ALPHA_SCAN_HI: f64 = 6.0;
const ALPHA_SCAN_STEP: f64 = 0.5;
const ALPHA_CAP_LOG10: f64 = 12.0;
const TAU_CAP: f64 = 1e12;

/// Prox value for `q > 1` without revalidating inputs.
#[inline]
fn eta(x: f64, chi: f64, q: f64) -> Result<f64> {
    if x == 0.0 || chi == 0.0 {
        return Ok(x);
    }
    if q == 2.0 {
        return Ok(x / (1.0 + 2.0 * chi));
    }
    Ok(solve_stationary(x.abs(), chi * q, q)?.copysign(x))
}

/// Normalized LASSO risk `E(η₁(μ + Z; α) − μ)²` for a single atom `μ >= 0`,
/// together with its derivative in `α`.
fn l1_atom(alpha: f64, mu: f64) -> (f64, f64) {
    let up = cdf(mu - alpha);
    let down = cdf(-mu - alpha);
    let inside = cdf(alpha - mu) - down;
    let r = (1.0 + alpha * alpha) * (up + down) - (alpha + mu) * pdf(alpha - mu) - (alpha - mu) * pdf(alpha + mu)
        + mu * mu * inside;
    let d = 2.0 * (alpha * up - pdf(alpha - mu) + alpha * down - pdf(alpha + mu));
    (r, d)
}

/// Normalized LASSO risk of a null coordinate and its derivative in `α`.
fn l1_null(alpha: f64) -> (f64, f64) {
    let tail = cdf(-alpha);
    (2.0 * ((1.0 + alpha * alpha) * tail - alpha * pdf(alpha)), 4.0 * (alpha * tail - pdf(alpha)))
}

/// `(risk, ∂risk/∂α)` at finite `α >= 0`.
pub(crate) fn risk_and_slope(alpha: f64, tau: f64, prior: &SignalPrior, q: f64, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let eps = prior.epsilon;
    if q == 1.0 {
        let (mut r, mut d) = (0.0, 0.0);
        if eps < 1.0 {
            let (rn, dn) = l1_null(alpha);
            r += (1.0 - eps) * rn;
            d += (1.0 - eps) * dn;
        }
        if eps > 0.0 {
            for (g, w) in prior.atoms() {
                let (ra, da) = l1_atom(alpha, g / tau);
                r += eps * w * ra;
                d += eps * w * da;
            }
        }
        let t2 = tau * tau;
        return Ok((t2 * r, t2 * d));
    }
    let chi = effective_chi(alpha, tau, q);
    if chi == 0.0 {
        // η is the identity; the slope keeps the first-order effect of χ.
        let slope = if q < 2.0 {
            0.0
        } else {
            let c = tau.powf(2.0 - q);
            let [s] = integrate_pair(tau, chi, q, prior, rule, |x, b| Ok([-2.0 * c * q * (x - b) * x.abs().powf(q - 1.0) * x.signum()]))?;
            s
        };
        return Ok((tau * tau, slope));
    }
    let c = tau.powf(2.0 - q);
    let [r, s] = integrate_pair(tau, chi, q, prior, rule, |x, b| {
        let e = eta(x, chi, q)?;
        Ok([(e - b) * (e - b), 2.0 * c * (e - b) * deriv_chi_at(e, chi, q)])
    })?;
    Ok((r, s))
}

/// Width of the region around the origin where `∂₁η_q` moves from 0 to 1
/// (`q < 2`); zero-width features are not refined further.
fn feature_width(chi: f64, q: f64) -> f64 {
    if q < 2.0 && chi > 0.0 {
        (chi * q * (q - 1.0)).powf(1.0 / (2.0 - q))
    } else {
        f64::INFINITY
    }
}

/// `E f(B + τZ, B)` split into the null component and the atoms.
fn integrate_pair<const N: usize, F>(tau: f64, chi: f64, q: f64, prior: &SignalPrior, rule: &QuadratureRule, f: F) -> Result<[f64; N]>
where
    F: Fn(f64, f64) -> Result<[f64; N]>,
{
    let fine = feature_width(chi, q);
    let eps = prior.epsilon;
    let mut total = [0.0; N];
    if eps < 1.0 {
        let v = rule.try_expect_even_n(tau, fine, |x| f(x, 0.0))?;
        for k in 0..N {
            total[k] += (1.0 - eps) * v[k];
        }
    }
    if eps > 0.0 {
        for (g, w) in prior.atoms() {
            let v = rule.try_expect_n(g, tau, &[0.0], fine, |x| f(x, g))?;
            for k in 0..N {
                total[k] += eps * w * v[k];
            }
        }
    }
    Ok(total)
}

fn check_alpha_tau(alpha: f64, tau: f64, q: f64) -> Result<()> {
    if !(alpha >= 0.0) {
        return Err(domain(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(domain(format!("tau must be positive and finite, got {tau}")));
    }
    if !(q >= 1.0) || !q.is_finite() {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    Ok(())
}

/// `E(η_q(B + τZ; ατ^{2−q}) − B)²`.
pub fn risk(alpha: f64, tau: f64, prior: &SignalPrior, q: f64) -> Result<f64> {
    risk_with_rule(alpha, tau, prior, q, default_rule())
}

pub fn risk_with_rule(alpha: f64, tau: f64, prior: &SignalPrior, q: f64, rule: &QuadratureRule) -> Result<f64> {
    check_alpha_tau(alpha, tau, q)?;
    prior.validate()?;
    if alpha.is_infinite() {
        return Ok(prior.second_moment());
    }
    Ok(risk_and_slope(alpha, tau, prior, q, rule)?.0)
}

/// `∂ risk / ∂α` at fixed `τ`.
pub fn risk_alpha_derivative(alpha: f64, tau: f64, prior: &SignalPrior, q: f64) -> Result<f64> {
    check_alpha_tau(alpha, tau, q)?;
    if alpha.is_infinite() {
        return Ok(0.0);
    }
    Ok(risk_and_slope(alpha, tau, prior, q, default_rule())?.1)
}

/// `E ∂₁η_q(B + τZ; ατ^{2−q})`.
pub fn mean_derivative(alpha: f64, tau: f64, prior: &SignalPrior, q: f64) -> Result<f64> {
    mean_derivative_with_rule(alpha, tau, prior, q, default_rule())
}

pub fn mean_derivative_with_rule(alpha: f64, tau: f64, prior: &SignalPrior, q: f64, rule: &QuadratureRule) -> Result<f64> {
    check_alpha_tau(alpha, tau, q)?;
    if alpha.is_infinite() {
        return Ok(0.0);
    }
    let eps = prior.epsilon;
    if q == 1.0 {
        let mut p = (1.0 - eps) * two_sided_tail(alpha);
        for (g, w) in prior.atoms() {
            let mu = g / tau;
            p += eps * w * (cdf(mu - alpha) + cdf(-mu - alpha));
        }
        return Ok(p);
    }
    let chi = effective_chi(alpha, tau, q);
    if chi == 0.0 {
        return Ok(1.0);
    }
    let [d] = integrate_pair(tau, chi, q, prior, rule, |x, _| Ok([deriv_u_at(eta(x, chi, q)?, chi, q)]))?;
    Ok(d)
}

/// `λ = ατ^{2−q}(1 − E η_q' / δ)`.
pub fn lambda_from_alpha(alpha: f64, tau: f64, model: &ModelParams, prior: &SignalPrior) -> Result<f64> {
    model.validate()?;
    check_alpha_tau(alpha, tau, model.q)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let d = mean_derivative(alpha, tau, prior, model.q)?;
    Ok(effective_chi(alpha, tau, model.q) * (1.0 - d / model.delta))
}

/// Finds `τ` with `τ² = σ² + risk(α, τ)/δ` at fixed `α`.
pub fn fixed_point_tau(alpha: f64, model: &ModelParams, prior: &SignalPrior) -> Result<f64> {
    model.validate()?;
    prior.validate()?;
    if !(alpha >= 0.0) {
        return Err(domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let (sigma2, delta) = (model.sigma * model.sigma, model.delta);
    let eb2 = prior.second_moment();
    if alpha.is_infinite() {
        let tau = (sigma2 + eb2 / delta).sqrt();
        return if tau > 0.0 { Ok(tau) } else { Err(Error::NoFixedPoint("zero signal and zero noise".into())) };
    }
    let h = |tau: f64| -> Result<f64> { Ok(tau * tau - sigma2 - risk_with_rule(alpha, tau, prior, model.q, default_rule())? / delta) };

    let lo = if model.sigma > 0.0 {
        let v = h(model.sigma)?;
        if v >= 0.0 {
            return Ok(model.sigma);
        }
        model.sigma
    } else {
        let start = (eb2 / delta).sqrt().max(1.0);
        let mut found = None;
        for k in 0..200 {
            let t = start * 0.5f64.powi(k);
            if h(t)? < 0.0 {
                found = Some(t);
                break;
            }
        }
        found.ok_or_else(|| Error::NoFixedPoint(format!("no positive fixed point at alpha = {alpha} with sigma = 0")))?
    };
    let mut hi = (2.0 * lo).max((sigma2 + eb2 / delta).sqrt());
    while h(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > TAU_CAP {
            return Err(Error::NoFixedPoint(format!("tau iterates exceed {TAU_CAP:e} at alpha = {alpha}")));
        }
    }
    brent_root(h, lo, hi, 1e-14 * hi, 300)
}

/// Minimizer over `α` of `risk(α, τ)` at fixed `τ`. Returns `(α*, risk)`;
/// `α* = ∞` when the zero estimator is optimal.
pub fn minimize_risk_over_alpha(tau: f64, prior: &SignalPrior, q: f64) -> Result<(f64, f64)> {
    minimize_with_rule(tau, prior, q, default_rule())
}

pub(crate) fn minimize_with_rule(tau: f64, prior: &SignalPrior, q: f64, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let eb2 = prior.second_moment();
    if prior.epsilon == 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = |la: f64| -> Result<(f64, f64)> { risk_and_slope(10f64.powf(la), tau, prior, q, rule) };

    let mut grid: Vec<f64> = Vec::new();
    let mut la = ALPHA_SCAN_LO;
    while la <= ALPHA_SCAN_HI + 1e-9 {
        grid.push(la);
        la += ALPHA_SCAN_STEP;
    }
    let mut values: Vec<f64> = grid.iter().map(|&x| f(x).map(|v| v.0)).collect::<Result<_>>()?;
    let argmin = |v: &[f64]| {
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if *x < v[best] {
                best = i;
            }
        }
        best
    };
    let mut i = argmin(&values);
    while i == grid.len() - 1 {
        let next = grid[i] + ALPHA_SCAN_STEP;
        if next > ALPHA_CAP_LOG10 {
            return Ok((f64::INFINITY, eb2));
        }
        grid.push(next);
        values.push(f(next)?.0);
        i = argmin(&values);
    }
    while i == 0 {
        let next = grid[0] - ALPHA_SCAN_STEP;
        if next < -ALPHA_CAP_LOG10 {
            let r0 = risk_and_slope(0.0, tau, prior, q, rule)?.0;
            return Ok(if r0 <= values[0] { (0.0, r0) } else { (10f64.powf(grid[0]), values[0]) });
        }
        grid.insert(0, next);
        values.insert(0, f(next)?.0);
        i = argmin(&values);
    }
    let (a, b) = (grid[i - 1], grid[i + 1]);
    let slope = |la: f64| -> Result<f64> { Ok(f(la)?.1) };
    let (sa, sb) = (slope(a)?, slope(b)?);
    let la_star = if sa < 0.0 && sb > 0.0 {
        brent_root(slope, a, b, 1e-13, 200)?
    } else {
        golden_section(|x| Ok(f(x)?.0), a, b, 1e-10, 300)?.0
    };
    let alpha = 10f64.powf(la_star);
    let r = f(la_star)?.0;
    if r <= values[i] {
        Ok((alpha, r))
    } else {
        Ok((10f64.powf(grid[i]), values[i]))
    }
}

/// Optimally tuned state-evolution point `(α*, τ*, λ*, AMSE)`.
pub fn optimal_tuning(model: &ModelParams, prior: &SignalPrior) -> Result<SEFixedPoint> {
    optimal_tuning_with_rule(model, prior, default_rule())
}

pub fn optimal_tuning_with_rule(model: &ModelParams, prior: &SignalPrior, rule: &QuadratureRule) -> Result<SEFixedPoint> {
    model.validate()?;
    prior.validate()?;
    let (sigma2, delta, q) = (model.sigma * model.sigma, model.delta, model.q);
    let eb2 = prior.second_moment();
    if eb2 == 0.0 {
        if model.sigma == 0.0 {
            return Err(Error::NoFixedPoint("zero signal and zero noise".into()));
        }
        return Ok(SEFixedPoint { q, alpha: f64::INFINITY, tau: model.sigma, lambda: f64::INFINITY, amse: 0.0 });
    }
    let tau_max = (sigma2 + eb2 / delta).sqrt();
    let g = |tau: f64| -> Result<f64> { Ok(tau * tau - sigma2 - minimize_with_rule(tau, prior, q, rule)?.1 / delta) };

    let g_hi = g(tau_max)?;
    let tau = if g_hi <= 0.0 {
        tau_max
    } else {
        let lo = if model.sigma > 0.0 {
            model.sigma
        } else {
            let mut found = None;
            for k in 1..=80 {
                let t = tau_max * 0.5f64.powi(k);
                if g(t)? < 0.0 {
                    found = Some(t);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::NoFixedPoint("noiseless model: only the trivial solution tau = 0 exists (exact recovery regime)".into())
            })?
        };
        if g(lo)? >= 0.0 {
            lo
        } else {
            brent_root(g, lo, tau_max, 1e-14 * tau_max, 300)?
        }
    };
    let (alpha, amse) = minimize_with_rule(tau, prior, q, rule)?;
    let lambda = if alpha.is_infinite() {
        f64::INFINITY
    } else {
        lambda_from_alpha(alpha, tau, model, prior)?.max(0.0)
    };
    Ok(SEFixedPoint { q, alpha, tau, lambda, amse })
}

/// Solves the coupled equations for a given penalty level `λ`.
pub fn solve_given_lambda(lambda: f64, model: &ModelParams, prior: &SignalPrior) -> Result<SEFixedPoint> {
    model.validate()?;
    prior.validate()?;
    if !(lambda > 0.0) {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    if lambda.is_infinite() {
        let tau = fixed_point_tau(f64::INFINITY, model, prior)?;
        return Ok(SEFixedPoint { q: model.q, alpha: f64::INFINITY, tau, lambda, amse: prior.second_moment() });
    }
    // λ(α) − λ on log α; unreachable α (no fixed point, or λ(α) <= 0) counts as "too small".
    let excess = |la: f64| -> Result<f64> {
        let alpha = 10f64.powf(la);
        match fixed_point_tau(alpha, model, prior) {
            Ok(tau) => {
                let l = lambda_from_alpha(alpha, tau, model, prior)?;
                Ok(if l > 0.0 { l - lambda } else { -lambda })
            }
            Err(Error::NoFixedPoint(_)) => Ok(-lambda),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = (0.0, 0.0);
    if excess(0.0)? <= 0.0 {
        loop {
            hi += 1.0;
            if hi > ALPHA_CAP_LOG10 {
                return Err(achievable_range(lambda, model, prior));
            }
            if excess(hi)? > 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        loop {
            lo -= 1.0;
            if lo < -ALPHA_CAP_LOG10 {
                return Err(achievable_range(lambda, model, prior));
            }
            if excess(lo)? <= 0.0 {
                break;
            }
            hi = lo;
        }
    }
    let la = brent_root(excess, lo, hi, 1e-14, 300)?;
    let alpha = 10f64.powf(la);
    let tau = fixed_point_tau(alpha, model, prior)?;
    let amse = risk(alpha, tau, prior, model.q)?;
    Ok(SEFixedPoint { q: model.q, alpha, tau, lambda, amse })
}

fn achievable_range(lambda: f64, model: &ModelParams, prior: &SignalPrior) -> Error {
    let at = |la: f64| -> f64 {
        let alpha = 10f64.powf(la);
        fixed_point_tau(alpha, model, prior)
            .and_then(|tau| lambda_from_alpha(alpha, tau, model, prior))
            .unwrap_or(f64::NAN)
    };
    let mut low = f64::NAN;
    let mut la = -ALPHA_CAP_LOG10;
    while la <= ALPHA_CAP_LOG10 && !(low > 0.0) {
        low = at(la);
        la += 1.0;
    }
    Error::Range { value: lambda, low: if low > 0.0 { low } else { 0.0 }, high: at(ALPHA_CAP_LOG10) }
}

/// `AMSE(q, λ)` for a given penalty level.
pub fn amse_at_lambda(lambda: f64, model: &ModelParams, prior: &SignalPrior) -> Result<f64> {
    Ok(solve_given_lambda(lambda, model, prior)?.amse)
}

/// Optimal `α*` for ridge (`q = 2`) in closed form.
pub fn ridge_optimal_alpha(model: &ModelParams, prior: &SignalPrior) -> f64 {
    let k = model.sigma * model.sigma / prior.second_moment();
    let c = k + 1.0 / model.delta - 1.0;
    0.25 * (c + (c * c + 4.0 * k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::sf;
    use proptest::prelude::*;

    fn paper_prior() -> SignalPrior {
        SignalPrior::point_mass(0.4, 8.0).unwrap()
    }

    // Independent oracle: E(η₁(μ + Z; α) − μ)² by brute-force quadrature on a fine grid.
    fn l1_atom_oracle(alpha: f64, mu: f64) -> f64 {
        let n = 400_000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let z = a + i as f64 * h;
            let x = mu + z;
            let e = if x > alpha { x - alpha } else if x < -alpha { x + alpha } else { 0.0 };
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * (e - mu).powi(2) * pdf(z);
        }
        s * h
    }

    #[test]
    fn lasso_closed_form_matches_quadrature_oracle() {
        for &(alpha, mu) in &[(0.5, 0.0), (1.2, 1.0), (0.8, 3.0), (2.5, 0.4), (0.0, 2.0)] {
            let (r, _) = l1_atom(alpha, mu);
            assert!((r - l1_atom_oracle(alpha, mu)).abs() < 1e-8, "alpha={alpha} mu={mu}");
        }
        let (rn, _) = l1_null(0.7);
        assert!((rn - l1_atom_oracle(0.7, 0.0)).abs() < 1e-8);
    }

    #[test]
    fn alpha_slopes_match_finite_differences() {
        let prior = SignalPrior::point_mass(0.3, 1.5).unwrap();
        for &q in &[1.0, 1.3, 2.0, 2.7] {
            for &alpha in &[0.2, 0.9, 2.0] {
                let tau = 0.8;
                let h = 1e-5;
                let (_, d) = risk_and_slope(alpha, tau, &prior, q, default_rule()).unwrap();
                let fd = (risk(alpha + h, tau, &prior, q).unwrap() - risk(alpha - h, tau, &prior, q).unwrap()) / (2.0 * h);
                assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()), "q={q} alpha={alpha} d={d} fd={fd}");
            }
        }
    }

    #[test]
    fn risk_trivial_cases() {
        let prior = paper_prior();
        for q in [1.0, 1.5, 2.0, 3.0] {
            assert!((risk(0.0, 1.7, &prior, q).unwrap() - 1.7 * 1.7).abs() < 1e-10);
        }
        let big = risk(1e8, 1.0, &prior, 2.0).unwrap();
        assert!((big - 25.6).abs() < 1e-5);
        // Ridge: risk = (2α/(1+2α))² EB² + τ²/(1+2α)².
        let (alpha, tau2): (f64, f64) = (0.3333, 17.07);
        let expected = (2.0 * alpha / (1.0 + 2.0 * alpha)).powi(2) * 25.6 + tau2 / (1.0 + 2.0 * alpha).powi(2);
        assert!((risk(alpha, tau2.sqrt(), &prior, 2.0).unwrap() - expected).abs() < 1e-10);
        assert!((expected - 10.24).abs() < 0.01);
    }

    #[test]
    fn fixed_point_examples() {
        let prior = paper_prior();
        let m = ModelParams::new(2.0, 1.0, 1.5).unwrap();
        let t = fixed_point_tau(0.0, &m, &prior).unwrap();
        assert!((t * t - 2.0).abs() < 1e-10);

        let m0 = ModelParams::new(0.6, 0.0, 2.0).unwrap();
        let t = fixed_point_tau(1e8, &m0, &prior).unwrap();
        assert!((t * t - 25.6 / 0.6).abs() < 1e-4);

        // Ridge at sigma = 0 solved symbolically:
        // τ²(1 − 1/(δ(1+2α)²)) = (2α/(1+2α))² EB²/δ.
        let alpha: f64 = 0.3333;
        let k = 1.0 + 2.0 * alpha;
        let oracle = (2.0 * alpha / k).powi(2) * 25.6 / 0.6 / (1.0 - 1.0 / (0.6 * k * k));
        let t = fixed_point_tau(alpha, &m0, &prior).unwrap();
        assert!((t * t - oracle).abs() < 1e-9 * oracle);
        assert!((oracle - 17.07).abs() < 0.01);
    }

    #[test]
    fn fixed_point_diverges_without_penalty_below_one() {
        let prior = paper_prior();
        let m = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        assert!(matches!(fixed_point_tau(0.0, &m, &prior), Err(Error::NoFixedPoint(_))));
    }

    #[test]
    fn optimal_tuning_on_paper_example() {
        let prior = paper_prior();
        let se = optimal_tuning(&ModelParams::new(0.6, 0.0, 2.0).unwrap(), &prior).unwrap();
        assert!((se.amse - 10.24).abs() < 1e-3, "{se:?}");
        let se1 = optimal_tuning(&ModelParams::new(0.6, 0.0, 1.0).unwrap(), &prior).unwrap();
        assert!((se1.amse - 14.9).abs() < 0.15, "{se1:?}");
    }

    #[test]
    fn no_signal_kills_everything() {
        let prior = SignalPrior::point_mass(0.0, 1.0).unwrap();
        for q in [1.0, 1.5, 2.0] {
            let se = optimal_tuning(&ModelParams::new(2.0, 1.0, q).unwrap(), &prior).unwrap();
            assert!(se.alpha.is_infinite());
            assert_eq!(se.amse, 0.0);
            assert_eq!(se.tau, 1.0);
        }
    }

    #[test]
    fn lambda_from_alpha_examples() {
        let prior = SignalPrior::point_mass(0.0, 1.0).unwrap();
        let m = ModelParams::new(1.5, 1.0, 1.0).unwrap();
        assert_eq!(lambda_from_alpha(0.0, 1.0, &m, &prior).unwrap(), 0.0);
        let (alpha, tau) = (0.8, 1.3);
        let expected = alpha * tau * (1.0 - 2.0 * sf(alpha) / 1.5);
        assert!((lambda_from_alpha(alpha, tau, &m, &prior).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn huge_lambda_zeroes_the_estimate() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        let m = ModelParams::new(0.8, 1.0, 1.0).unwrap();
        let se = solve_given_lambda(1e9, &m, &prior).unwrap();
        assert!((se.tau * se.tau - 1.375).abs() < 1e-6);
        assert!((se.amse - 0.3).abs() < 1e-6);
    }

    #[test]
    fn tiny_lambda_ridge_is_least_squares() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        let m = ModelParams::new(2.0, 1.0, 2.0).unwrap();
        let se = solve_given_lambda(1e-7, &m, &prior).unwrap();
        assert!((se.tau * se.tau - 2.0).abs() < 1e-5, "{se:?}");
        assert!(se.alpha < 1e-6);
    }

    #[test]
    fn lambda_round_trip() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        for q in [1.0, 1.5, 2.0, 3.0] {
            let m = ModelParams::new(0.8, 0.5, q).unwrap();
            let se = optimal_tuning(&m, &prior).unwrap();
            let back = solve_given_lambda(se.lambda, &m, &prior).unwrap();
            assert!((back.alpha - se.alpha).abs() <= 1e-6 * se.alpha, "q={q} {se:?} {back:?}");
            assert!((back.tau - se.tau).abs() <= 1e-6 * se.tau, "q={q}");
            let lam = lambda_from_alpha(back.alpha, back.tau, &m, &prior).unwrap();
            assert!((lam - se.lambda).abs() <= 1e-8 * se.lambda, "q={q}");
        }
    }

    #[test]
    fn out_of_reach_lambda_reports_range() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        let m = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        match solve_given_lambda(1e30, &m, &prior) {
            Err(Error::Range { high, .. }) => assert!(high < 1e30),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn optimal_lambda_beats_audit_grid() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        for q in [1.0, 1.5, 2.0] {
            let m = ModelParams::new(0.8, 0.5, q).unwrap();
            let se = optimal_tuning(&m, &prior).unwrap();
            for k in 0..20 {
                let lambda = se.lambda * 10f64.powf(-1.0 + 2.0 * k as f64 / 19.0);
                let amse = amse_at_lambda(lambda, &m, &prior).unwrap();
                assert!(se.amse <= amse + 1e-9, "q={q} lambda={lambda} amse={amse} best={}", se.amse);
            }
        }
    }

    #[test]
    fn lasso_alpha_increases_with_lambda() {
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        let m = ModelParams::new(0.8, 0.5, 1.0).unwrap();
        let mut last = 0.0;
        for k in 0..15 {
            let lambda = 0.05 * 1.4f64.powi(k);
            let se = solve_given_lambda(lambda, &m, &prior).unwrap();
            assert!(se.alpha > last);
            last = se.alpha;
        }
    }

    #[test]
    fn quadrature_order_doubling_is_stable() {
        let rule = QuadratureRule::default();
        let fine = rule.doubled();
        let prior = SignalPrior::point_mass(0.3, 1.0).unwrap();
        for &q in &[1.1, 1.2, 1.5, 1.8, 2.5, 3.0, 4.0] {
            for &alpha in &[1e-3, 0.1, 1.0, 5.0, 50.0] {
                for &tau in &[0.02, 0.3, 1.0, 5.0, 40.0] {
                    let a = risk_with_rule(alpha, tau, &prior, q, &rule).unwrap();
                    let b = risk_with_rule(alpha, tau, &prior, q, &fine).unwrap();
                    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "risk q={q} alpha={alpha} tau={tau}: {a} vs {b}");
                    let a = mean_derivative_with_rule(alpha, tau, &prior, q, &rule).unwrap();
                    let b = mean_derivative_with_rule(alpha, tau, &prior, q, &fine).unwrap();
                    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "deriv q={q} alpha={alpha} tau={tau}: {a} vs {b}");
                }
            }
        }
    }

    fn config() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.5..3.0f64, 0.2..5.0f64, 0.05..0.5f64, 0.5..8.0f64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn ridge_matches_closed_form((delta, sigma, eps, m) in config()) {
            let prior = SignalPrior::point_mass(eps, m).unwrap();
            let model = ModelParams::new(delta, sigma, 2.0).unwrap();
            let se = optimal_tuning(&model, &prior).unwrap();
            let closed = ridge_optimal_alpha(&model, &prior);
            prop_assert!((se.alpha - closed).abs() <= 1e-8 * (1.0 + closed), "{} vs {}", se.alpha, closed);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn fixed_point_is_self_consistent((delta, sigma, eps, m) in config(), q in prop_oneof![Just(1.0), 1.1..3.5f64]) {
            let prior = SignalPrior::point_mass(eps, m).unwrap();
            let model = ModelParams::new(delta, sigma, q).unwrap();
            let se = optimal_tuning(&model, &prior).unwrap();
            let lhs = se.tau * se.tau;
            let rhs = sigma * sigma + se.amse / delta;
            prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs);
            if se.alpha.is_finite() {
                let again = risk(se.alpha, se.tau, &prior, q).unwrap();
                prop_assert!((again - se.amse).abs() <= 1e-8 * (1.0 + se.amse));
            }
            prop_assert!(se.tau >= sigma * (1.0 - 1e-12));
            prop_assert!(se.tau <= (sigma * sigma + prior.second_moment() / delta).sqrt() * (1.0 + 1e-12));
        }
    }
}
