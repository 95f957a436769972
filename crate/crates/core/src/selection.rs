//! Asymptotic AFDP/ATPP of LASSO, two-stage bridge, debiased two-stage and
//! SIS selection, and the trade-off curves they trace.
//!
//! For atomic priors every quantity is a Gaussian tail: a coordinate survives
//! the second stage iff `|η_q(x; χ)| > s`, which is equivalent to
//! `|x| > s + χ q s^{q−1}`.

use crate::error::{domain, Error, Result};
use crate::normal::{cdf, two_sided_tail};
use crate::optimize::bisect;
use crate::prior::SignalPrior;
use crate::prox::solve_stationary;
use crate::state_evolution::{fixed_point_tau, lambda_from_alpha, optimal_tuning, solve_given_lambda, ModelParams, SEFixedPoint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// First-stage penalty level (`+∞` for SIS).
    pub lambda: f64,
    /// Second-stage threshold, `+∞` when nothing is selected.
    pub s: f64,
    pub atpp: f64,
    pub afdp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lasso,
    TwoStage,
    DebiasedTwoStage,
    Sis,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::TwoStage => "two_stage",
            Method::DebiasedTwoStage => "debiased_two_stage",
            Method::Sis => "sis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub method: Method,
    pub q: f64,
    /// Effective noise level of the scalar channel the curve was computed on.
    pub tau: f64,
    /// `τ₀ = √(σ² + E B²/δ)` for SIS curves.
    pub tau0: Option<f64>,
    /// Points sorted by `s` ascending; LASSO curves are sorted by `λ` instead.
    pub points: Vec<TradeoffPoint>,
}

/// How the first-stage penalty is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    Optimal,
    Lambda(f64),
}

/// ATPP of the rule `|x| > t` on the channel `G + τZ`.
fn tail_atpp(t: f64, tau: f64, prior: &SignalPrior) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    prior.atoms().iter().map(|(g, w)| w * (cdf((g - t) / tau) + cdf((-g - t) / tau))).sum()
}

fn afdp_from(null_rate: f64, atpp: f64, eps: f64) -> f64 {
    let num = (1.0 - eps) * null_rate;
    let den = num + eps * atpp;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Selection point of the rule `|x| > t` on the channel `B + τZ`.
fn channel_point(t: f64, tau: f64, prior: &SignalPrior) -> (f64, f64) {
    if t.is_infinite() {
        return (0.0, 0.0);
    }
    let atpp = tail_atpp(t, tau, prior);
    (atpp, afdp_from(two_sided_tail(t / tau), atpp, prior.epsilon))
}

/// Input threshold `t` with `|η_q(x; χ)| > s ⇔ |x| > t`.
pub fn input_threshold(s: f64, chi: f64, q: f64) -> f64 {
    if s.is_infinite() || chi.is_infinite() {
        return f64::INFINITY;
    }
    if q == 1.0 {
        s + chi
    } else if s == 0.0 {
        0.0
    } else {
        s + chi * q * s.powf(q - 1.0)
    }
}

/// Inverse of [`input_threshold`] in `s`.
fn output_threshold(t: f64, chi: f64, q: f64) -> Result<f64> {
    if t.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if q == 1.0 {
        return Ok(t - chi);
    }
    if t == 0.0 || chi == 0.0 {
        return Ok(t);
    }
    if q == 2.0 {
        return Ok(t / (1.0 + 2.0 * chi));
    }
    solve_stationary(t, chi * q, q)
}

/// AFDP/ATPP after thresholding the bridge estimate at `s`.
pub fn two_stage_point(se: &SEFixedPoint, s: f64, prior: &SignalPrior) -> TradeoffPoint {
    let t = input_threshold(s, se.chi(), se.q);
    let (atpp, afdp) = channel_point(t, se.tau, prior);
    TradeoffPoint { lambda: se.lambda, s, atpp, afdp }
}

/// AFDP/ATPP of the LASSO support.
pub fn lasso_point(se: &SEFixedPoint, prior: &SignalPrior) -> Result<TradeoffPoint> {
    if se.q != 1.0 {
        return Err(domain(format!("lasso point requires q = 1, got {}", se.q)));
    }
    Ok(two_stage_point(se, 0.0, prior))
}

/// AFDP/ATPP after thresholding the debiased estimate, which behaves like `B + τZ`.
pub fn debiased_point(tau: f64, s: f64, prior: &SignalPrior) -> TradeoffPoint {
    let (atpp, afdp) = channel_point(s, tau, prior);
    TradeoffPoint { lambda: f64::NAN, s, atpp, afdp }
}

/// `τ₀ = √(σ² + E B²/δ)`, the noise level seen by marginal screening.
pub fn sis_tau(model: &ModelParams, prior: &SignalPrior) -> f64 {
    (model.sigma * model.sigma + prior.second_moment() / model.delta).sqrt()
}

/// Sure independence screening: threshold `Xᵀy` at `s`.
pub fn sis_point(model: &ModelParams, prior: &SignalPrior, s: f64) -> TradeoffPoint {
    let mut p = debiased_point(sis_tau(model, prior), s, prior);
    p.lambda = f64::INFINITY;
    p
}

/// Channel a threshold is inverted on.
#[derive(Debug, Clone, Copy)]
pub enum ThresholdContext<'a> {
    TwoStage(&'a SEFixedPoint),
    Debiased(f64),
}

/// Threshold `s` at which the selection reaches ATPP `ζ`.
pub fn threshold_for_atpp(ctx: ThresholdContext<'_>, zeta: f64, prior: &SignalPrior) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(domain(format!("target atpp must lie in [0, 1], got {zeta}")));
    }
    if zeta == 0.0 {
        return Ok(f64::INFINITY);
    }
    let (tau, chi, q) = match ctx {
        ThresholdContext::TwoStage(se) => (se.tau, se.chi(), se.q),
        ThresholdContext::Debiased(tau) => (tau, 0.0, 2.0),
    };
    if chi.is_infinite() {
        return Err(Error::Range { value: zeta, low: 0.0, high: 0.0 });
    }
    let t_min = input_threshold(0.0, chi, q);
    let ceiling = tail_atpp(t_min, tau, prior);
    if zeta >= ceiling {
        if zeta - ceiling <= 1e-12 {
            return Ok(0.0);
        }
        return Err(Error::Range { value: zeta, low: 0.0, high: ceiling });
    }
    let mut hi = t_min + tau;
    while tail_atpp(hi, tau, prior) > zeta {
        hi = t_min + 2.0 * (hi - t_min);
    }
    let t = bisect(|t| Ok(tail_atpp(t, tau, prior) - zeta), t_min, hi, 0.0, 400)?;
    Ok(output_threshold(t, chi, q)?.max(0.0))
}

/// Options for [`build_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveOptions {
    /// Drop grid values above the method's reachable ATPP and append the
    /// ceiling point instead of failing.
    pub clip_to_reachable: bool,
}

/// Trade-off curve of one method on an ATPP grid.
pub fn build_curve(
    method: Method,
    model: &ModelParams,
    prior: &SignalPrior,
    tuning: Tuning,
    atpp_grid: &[f64],
    opts: CurveOptions,
) -> Result<TradeoffCurve> {
    model.validate()?;
    prior.validate()?;
    if let Some(bad) = atpp_grid.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(domain(format!("atpp grid values must lie in [0, 1], got {bad}")));
    }
    let q = model.q;
    let (tau, tau0, mut points) = match method {
        Method::Lasso => {
            if q != 1.0 {
                return Err(domain("lasso curves require q = 1"));
            }
            let mut pts = Vec::new();
            let mut tau = f64::NAN;
            for &zeta in atpp_grid {
                match lasso_point_for_atpp(zeta, model, prior) {
                    Ok((p, t)) => {
                        pts.push(p);
                        tau = t;
                    }
                    Err(Error::Range { .. }) if opts.clip_to_reachable => {}
                    Err(e) => return Err(e),
                }
            }
            pts.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
            (tau, None, pts)
        }
        Method::TwoStage | Method::DebiasedTwoStage => {
            let se = match tuning {
                Tuning::Optimal => optimal_tuning(model, prior)?,
                Tuning::Lambda(l) => solve_given_lambda(l, model, prior)?,
            };
            let mut pts = Vec::new();
            let mut clipped = false;
            for &zeta in atpp_grid {
                let point = if method == Method::TwoStage {
                    threshold_for_atpp(ThresholdContext::TwoStage(&se), zeta, prior).map(|s| two_stage_point(&se, s, prior))
                } else {
                    threshold_for_atpp(ThresholdContext::Debiased(se.tau), zeta, prior).map(|s| {
                        let mut p = debiased_point(se.tau, s, prior);
                        p.lambda = se.lambda;
                        p
                    })
                };
                match point {
                    Ok(p) => pts.push(p),
                    Err(Error::Range { .. }) if opts.clip_to_reachable => clipped = true,
                    Err(e) => return Err(e),
                }
            }
            if clipped {
                pts.push(two_stage_point(&se, 0.0, prior));
            }
            (se.tau, None, pts)
        }
        Method::Sis => {
            let tau0 = sis_tau(model, prior);
            let mut pts = Vec::new();
            for &zeta in atpp_grid {
                let s = threshold_for_atpp(ThresholdContext::Debiased(tau0), zeta, prior)?;
                pts.push(sis_point(model, prior, s));
            }
            (tau0, Some(tau0), pts)
        }
    };
    if method != Method::Lasso {
        points.sort_by(|a, b| a.s.total_cmp(&b.s));
        points.dedup_by(|a, b| a.s == b.s);
    }
    Ok(TradeoffCurve { method, q, tau, tau0, points })
}

/// LASSO operating point whose ATPP equals `ζ`, found by sweeping `λ` through `α`.
fn lasso_point_for_atpp(zeta: f64, model: &ModelParams, prior: &SignalPrior) -> Result<(TradeoffPoint, f64)> {
    let at = |la: f64| -> Result<Option<(SEFixedPoint, TradeoffPoint)>> {
        let alpha = 10f64.powf(la);
        let tau = match fixed_point_tau(alpha, model, prior) {
            Ok(t) => t,
            Err(Error::NoFixedPoint(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let lambda = lambda_from_alpha(alpha, tau, model, prior)?;
        if !(lambda > 0.0) {
            return Ok(None);
        }
        let se = SEFixedPoint { q: 1.0, alpha, tau, lambda, amse: f64::NAN };
        let p = two_stage_point(&se, 0.0, prior);
        Ok(Some((se, p)))
    };
    if zeta == 0.0 {
        return Ok((TradeoffPoint { lambda: f64::INFINITY, s: 0.0, atpp: 0.0, afdp: 0.0 }, fixed_point_tau(f64::INFINITY, model, prior)?));
    }
    // Smallest reachable α: bisect the boundary of the admissible region.
    let admissible = |la: f64| -> Result<bool> { Ok(at(la)?.is_some()) };
    let (mut lo, mut hi) = (-12.0, 12.0);
    if !admissible(hi)? {
        return Err(Error::NoFixedPoint("lasso state evolution has no admissible alpha".into()));
    }
    if !admissible(lo)? {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
    }
    let ceiling = at(lo)?.map(|(_, p)| p.atpp).unwrap_or(0.0);
    if zeta > ceiling {
        return Err(Error::Range { value: zeta, low: 0.0, high: ceiling });
    }
    let mut top = lo;
    while at(top)?.map(|(_, p)| p.atpp).unwrap_or(0.0) > zeta {
        top += 1.0;
        if top > 14.0 {
            break;
        }
    }
    let la = bisect(
        |la| Ok(at(la)?.map(|(_, p)| p.atpp).unwrap_or(0.0) - zeta),
        lo,
        top,
        1e-15,
        200,
    )?;
    let (se, p) = at(la)?.ok_or_else(|| Error::NoFixedPoint("lasso sweep left the admissible region".into()))?;
    Ok((p, se.tau))
}
