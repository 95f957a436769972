//! Closed-form asymptotic expansions of the optimally tuned AMSE.
//!
//! Each expansion returns its leading and second-order terms separately so the
//! two orders can be compared against the exact state-evolution solution.

use crate::error::{domain, Error, Result};
use crate::normal::{cdf, pdf};
use crate::optimize::{bisect, brent_root, golden_section};
use crate::prior::{abs_moment, QuadratureRule, SignalPrior};
use crate::prox::prox_bridge;
use crate::state_evolution::ModelParams;
use serde::{Deserialize, Serialize};

/// Which limit an expansion describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LargeNoise,
    LowNoise,
    LargeSample,
    ExtremeSparse,
    NearlyBlack(NearlyBlackCase),
}

impl Regime {
    pub fn tag(&self) -> String {
        match self {
            Regime::LargeNoise => "large_noise".into(),
            Regime::LowNoise => "low_noise".into(),
            Regime::LargeSample => "large_sample".into(),
            Regime::ExtremeSparse => "extreme_sparse".into(),
            Regime::NearlyBlack(c) => format!("nearly_black_{}", c.tag()),
        }
    }
}

/// Growth of the signal strength `b_ε` as `ε → 0`.
///
/// For `q > 1` the boundary is `b_ε ≍ ε^{(1−q)/2}`; for LASSO it is
/// `b_ε ≍ √(2 log ε⁻¹)`, and `Theta(c)` carries the limiting ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearlyBlackCase {
    Omega,
    LittleO,
    Theta(f64),
}

impl NearlyBlackCase {
    fn tag(&self) -> &'static str {
        match self {
            NearlyBlackCase::Omega => "omega",
            NearlyBlackCase::LittleO => "o",
            NearlyBlackCase::Theta(_) => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub leading: f64,
    /// Zero when only the leading order is known.
    pub second_order: f64,
    pub regime: Regime,
    pub validity_note: String,
}

impl ExpansionResult {
    pub fn total(&self) -> f64 {
        self.leading + self.second_order
    }
}

/// `E η₁²(Z; χ) = 2[(1 + χ²)Φ(−χ) − χφ(χ)]`.
fn soft_null_risk(chi: f64) -> f64 {
    2.0 * ((1.0 + chi * chi) * cdf(-chi) - chi * pdf(chi))
}

/// `(M₁(ε), argmin χ)` with `M₁(ε) = min_χ (1 − ε)Eη₁²(Z; χ) + ε(1 + χ²)`.
pub fn m1_with_argmin(epsilon: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    if epsilon == 1.0 {
        return Ok((1.0, 0.0));
    }
    let slope = |chi: f64| Ok(4.0 * (1.0 - epsilon) * (chi * cdf(-chi) - pdf(chi)) + 2.0 * epsilon * chi);
    let mut hi = 1.0;
    while slope(hi)? <= 0.0 {
        hi *= 2.0;
    }
    let chi = brent_root(slope, 0.0, hi, 1e-15, 200)?;
    Ok(((1.0 - epsilon) * soft_null_risk(chi) + epsilon * (1.0 + chi * chi), chi))
}

pub fn m1(epsilon: f64) -> Result<f64> {
    Ok(m1_with_argmin(epsilon)?.0)
}

/// `c_q = (E|Z|^{(2−q)/(q−1)})² / ((q − 1)² E|Z|^{2/(q−1)})`.
pub fn cq(q: f64) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(domain(format!("c_q requires q > 1, got {q}")));
    }
    let num = abs_moment((2.0 - q) / (q - 1.0))?;
    let den = abs_moment(2.0 / (q - 1.0))?;
    // Ratio first: both moments overflow together as q → 1.
    Ok((num / den.sqrt()).powi(2) / (q - 1.0).powi(2))
}

/// Left side of the equation defining `C₀`:
/// `E[e^{CG}(CG − 1) + e^{−CG}(−CG − 1)]`.
pub fn c0_lhs(c: f64, prior: &SignalPrior) -> f64 {
    prior
        .atoms()
        .iter()
        .map(|(g, w)| {
            let x = c * g;
            w * (x.exp() * (x - 1.0) - (-x).exp() * (x + 1.0))
        })
        .sum()
}

/// The constant `C₀` bounding the exponential remainder of the LASSO large-noise expansion.
pub fn c0(prior: &SignalPrior) -> Result<f64> {
    prior.validate()?;
    let eps = prior.epsilon;
    if eps <= 0.0 || eps >= 1.0 {
        return Err(domain(format!("C0 requires epsilon in (0, 1), got {eps}")));
    }
    let target = 2.0 * (1.0 - eps) / eps;
    let f = |c: f64| Ok(c0_lhs(c, prior) - target);
    let mut hi = 1.0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
    }
    bisect(f, 0.0, hi, 0.0, 2000)
}

fn require_fraction(prior: &SignalPrior) -> Result<()> {
    prior.validate()?;
    if prior.epsilon <= 0.0 || prior.epsilon >= 1.0 {
        return Err(Error::Regime(format!("expansion requires 0 < epsilon < 1, got {}", prior.epsilon)));
    }
    Ok(())
}

/// Expansion as `σ → ∞`.
pub fn amse_large_noise(q: f64, prior: &SignalPrior, sigma: f64) -> Result<ExpansionResult> {
    require_fraction(prior)?;
    if !(sigma > 0.0) {
        return Err(domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(q >= 1.0) {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    let eg2 = prior.nonzero_moment(2.0);
    let leading = prior.epsilon * eg2;
    if q == 1.0 {
        return Ok(ExpansionResult {
            leading,
            second_order: 0.0,
            regime: Regime::LargeNoise,
            validity_note: format!("q = 1: remainder is o(exp(-C^2 sigma^2 / 2)) for any C < C0 = {}", c0(prior)?),
        });
    }
    let second = -(prior.epsilon * eg2).powi(2) * cq(q)? / (sigma * sigma);
    Ok(ExpansionResult {
        leading,
        second_order: second,
        regime: Regime::LargeNoise,
        validity_note: format!("q = {q}: second-order term -eps^2 (E G^2)^2 c_q / sigma^2, remainder o(sigma^-2)"),
    })
}

/// Expansion as `σ → 0`.
pub fn amse_low_noise(model: &ModelParams, prior: &SignalPrior) -> Result<ExpansionResult> {
    model.validate()?;
    require_fraction(prior)?;
    let (q, delta, s2) = (model.q, model.delta, model.sigma * model.sigma);
    let eps = prior.epsilon;
    if q == 1.0 {
        let m = m1(eps)?;
        if delta <= m {
            return Err(Error::Regime(format!("low-noise LASSO expansion needs delta > M1(eps) = {m}, got delta = {delta}")));
        }
        return Ok(ExpansionResult {
            leading: delta * m * s2 / (delta - m),
            second_order: 0.0,
            regime: Regime::LowNoise,
            validity_note: format!("q = 1, M1 = {m}: exponentially small remainder"),
        });
    }
    if delta <= 1.0 {
        return Err(Error::Regime(format!("low-noise expansion for q > 1 needs delta > 1, got {delta}")));
    }
    let leading = s2 / (1.0 - 1.0 / delta);
    let d1 = delta - 1.0;
    let (second, note) = if q < 2.0 {
        let ez = abs_moment(q)?;
        let v = s2.powf(q) * delta.powf(q + 1.0) * (1.0 - eps).powi(2) * ez * ez
            / (d1.powf(q + 1.0) * eps * prior.nonzero_moment(2.0 * q - 2.0));
        (-v, "1 < q < 2: remainder o(sigma^{2q})")
    } else if q == 2.0 {
        (-s2 * s2 * delta.powi(3) / (d1.powi(3) * eps * prior.nonzero_moment(2.0)), "q = 2: remainder o(sigma^4)")
    } else {
        let v = s2 * s2 * delta.powi(3) * eps * (q - 1.0).powi(2) * prior.nonzero_moment(q - 2.0).powi(2)
            / (d1.powi(3) * prior.nonzero_moment(2.0 * q - 2.0));
        (-v, "q > 2: remainder o(sigma^4)")
    };
    Ok(ExpansionResult { leading, second_order: second, regime: Regime::LowNoise, validity_note: note.into() })
}

/// Expansion as `δ → ∞` for the model whose noise is scaled by `1/√δ`.
pub fn amse_large_sample(model: &ModelParams, prior: &SignalPrior) -> Result<ExpansionResult> {
    model.validate()?;
    require_fraction(prior)?;
    let (q, delta, s2) = (model.q, model.delta, model.sigma * model.sigma);
    let eps = prior.epsilon;
    if q == 1.0 {
        let m = m1(eps)?;
        return Ok(ExpansionResult {
            leading: m * s2 / delta,
            second_order: 0.0,
            regime: Regime::LargeSample,
            validity_note: format!("q = 1, M1 = {m}: remainder o(1/delta)"),
        });
    }
    let leading = s2 / delta;
    let (second, note) = if q < 2.0 {
        let ez = abs_moment(q)?;
        let v = s2.powf(q) / delta.powf(q) * (1.0 - eps).powi(2) * ez * ez / (eps * prior.nonzero_moment(2.0 * q - 2.0));
        (-v, "1 < q < 2: remainder o(delta^-q)")
    } else if q == 2.0 {
        (s2 / (delta * delta) * (1.0 - s2 / (eps * prior.nonzero_moment(2.0))), "q = 2: remainder o(delta^-2)")
    } else {
        let ratio = eps * (q - 1.0).powi(2) * s2 * prior.nonzero_moment(q - 2.0).powi(2) / prior.nonzero_moment(2.0 * q - 2.0);
        (s2 / (delta * delta) * (1.0 - ratio), "q > 2: remainder o(delta^-2)")
    };
    Ok(ExpansionResult { leading, second_order: second, regime: Regime::LargeSample, validity_note: note.into() })
}

/// Coefficient of `ε²` subtracted from `ε E G²` in the very sparse limit with fixed signal strength:
/// `E²(|G/σ + Z|^{1/(q−1)} sgn(G/σ + Z) G) / E|Z|^{2/(q−1)}`.
pub fn sparse_second_order(q: f64, prior: &SignalPrior, sigma: f64) -> Result<f64> {
    prior.validate()?;
    if !(q > 1.0) || !q.is_finite() {
        return Err(domain(format!("sparse expansion requires q > 1, got {q}")));
    }
    if !(sigma > 0.0) {
        return Err(domain(format!("sigma must be positive, got {sigma}")));
    }
    let r = 1.0 / (q - 1.0);
    let den = abs_moment(2.0 * r)?;
    let rule = QuadratureRule::default().with_half_width(10.0 + 2.0 * r.sqrt());
    let mut num = 0.0;
    for (g, w) in prior.atoms() {
        let mu = g / sigma;
        let e = rule.try_expect(mu, 1.0, &[0.0], |x| Ok(x.abs().powf(r) * x.signum()))?;
        num += w * g * e;
    }
    // Scale before squaring: both factors overflow for r near 100.
    Ok((num / den.sqrt()).powi(2))
}

/// `AMSE(q, λ*) = ε E G² − ε² · coefficient + o(ε²)` with fixed signal strength.
pub fn amse_extreme_sparse(q: f64, prior: &SignalPrior, sigma: f64) -> Result<ExpansionResult> {
    prior.validate()?;
    let eps = prior.epsilon;
    let leading = eps * prior.nonzero_moment(2.0);
    if q == 1.0 {
        return Ok(ExpansionResult {
            leading,
            second_order: 0.0,
            regime: Regime::ExtremeSparse,
            validity_note: "q = 1: remainder o(eps^k) for every k".into(),
        });
    }
    Ok(ExpansionResult {
        leading,
        second_order: -eps * eps * sparse_second_order(q, prior, sigma)?,
        regime: Regime::ExtremeSparse,
        validity_note: format!("q = {q}: remainder o(eps^2)"),
    })
}

/// `C* = [σ^{2q−2} E|Z|^{2/(q−1)} / ((q − 1) q^{2q/(q−1)} E|G̃|^{2q−2})]^{(q−1)/(2q)}`.
pub fn nearly_black_c_star(q: f64, prior: &SignalPrior, sigma: f64) -> Result<f64> {
    if !(q > 1.0 && q < 2.0) {
        return Err(domain(format!("C* is defined for 1 < q < 2, got {q}")));
    }
    let g = normalized_moment(prior, 2.0 * q - 2.0);
    let base = sigma.powf(2.0 * q - 2.0) * abs_moment(2.0 / (q - 1.0))? / ((q - 1.0) * q.powf(2.0 * q / (q - 1.0)) * g);
    Ok(base.powf((q - 1.0) / (2.0 * q)))
}

fn normalized_moment(prior: &SignalPrior, r: f64) -> f64 {
    prior.normalized_atoms().iter().map(|(g, w)| w * g.powf(r)).sum()
}

/// `h(C) = (Cq)^{−2/(q−1)} σ² E|Z|^{2/(q−1)} + E(η_q(c G̃; Cσ^{2−q}) − c G̃)²`.
pub fn nearly_black_h(c_big: f64, q: f64, c_r: f64, prior: &SignalPrior, sigma: f64) -> Result<f64> {
    let first = (c_big * q).powf(-2.0 / (q - 1.0)) * sigma * sigma * abs_moment(2.0 / (q - 1.0))?;
    let chi = c_big * sigma.powf(2.0 - q);
    let mut second = 0.0;
    for (g, w) in prior.normalized_atoms() {
        let x = c_r * g;
        second += w * (prox_bridge(x, chi, q)? - x).powi(2);
    }
    Ok(first + second)
}

/// Minimizes `h` over `C > 0`; returns `(argmin, min)`.
pub fn minimize_nearly_black_h(q: f64, c_r: f64, prior: &SignalPrior, sigma: f64) -> Result<(f64, f64)> {
    let h = |lc: f64| nearly_black_h(10f64.powf(lc), q, c_r, prior, sigma);
    let (mut lo, mut hi): (f64, f64) = (-4.0, 4.0);
    let step = 0.1;
    loop {
        let n = ((hi - lo) / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| h(x)).collect::<Result<_>>()?;
        let mut i = 0;
        for k in 0..vals.len() {
            if vals[k] < vals[i] {
                i = k;
            }
        }
        if i == 0 && lo > -12.0 {
            lo -= 4.0;
            continue;
        }
        if i == grid.len() - 1 && hi < 12.0 {
            hi += 4.0;
            continue;
        }
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(grid.len() - 1)];
        let (lc, v) = golden_section(h, a, b, 1e-12, 400)?;
        return Ok((10f64.powf(lc), v));
    }
}

/// Limit of the suitably normalized AMSE in the nearly black regime.
///
/// `prior` supplies `G̃` (its atoms are rescaled to unit second moment). The
/// ridge `Theta` case needs `delta` and is reported with the same
/// `ε^{−1/2} b_ε^{−1}` normalization as `1 < q < 2`.
pub fn nearly_black_rate(
    q: f64,
    case: NearlyBlackCase,
    prior: &SignalPrior,
    sigma: f64,
    delta: Option<f64>,
) -> Result<ExpansionResult> {
    prior.validate()?;
    if !(q >= 1.0) {
        return Err(domain(format!("q must be >= 1, got {q}")));
    }
    if !(sigma > 0.0) {
        return Err(domain(format!("sigma must be positive, got {sigma}")));
    }
    let regime = Regime::NearlyBlack(case);
    let done = |leading: f64, note: String| Ok(ExpansionResult { leading, second_order: 0.0, regime, validity_note: note });
    if q == 1.0 {
        return match case {
            NearlyBlackCase::Omega => done(2.0 * sigma * sigma, "AMSE / (eps log(1/eps)), b = omega(sqrt(log 1/eps))".into()),
            NearlyBlackCase::LittleO => done(1.0, "AMSE / (eps b^2), b = o(sqrt(log 1/eps))".into()),
            NearlyBlackCase::Theta(c) => {
                check_ratio(c)?;
                let v: f64 = prior
                    .normalized_atoms()
                    .iter()
                    .map(|(g, w)| w * (crate::prox::soft_threshold(c * g, sigma) - c * g).powi(2))
                    .sum();
                done(v, format!("AMSE / (eps log(1/eps)), b / sqrt(2 log 1/eps) -> {c}"))
            }
        };
    }
    if q > 2.0 && case != NearlyBlackCase::LittleO {
        return Err(domain("for q > 2 only the b = o(eps^{(1-q)/2}) case applies"));
    }
    if q == 2.0 && case == NearlyBlackCase::Omega {
        return Err(domain("for q = 2 only the o and theta cases apply"));
    }
    match case {
        NearlyBlackCase::LittleO => done(1.0, "AMSE / (eps b^2), b = o(eps^{(1-q)/2})".into()),
        NearlyBlackCase::Omega => {
            let v = q * (q - 1.0).powf(1.0 / q - 1.0)
                * sigma.powf(2.0 / q)
                * abs_moment(2.0 / (q - 1.0))?.powf((q - 1.0) / q)
                * normalized_moment(prior, 2.0 * q - 2.0).powf(1.0 / q);
            done(v, "AMSE / (eps^{1/q} b^{2(q-1)/q}), b = omega(eps^{(1-q)/2})".into())
        }
        NearlyBlackCase::Theta(c) => {
            check_ratio(c)?;
            if q == 2.0 {
                let delta = delta.ok_or_else(|| domain("the ridge theta case needs delta"))?;
                let k = sigma * sigma / (c * c);
                let m = k + 1.0 / delta - 1.0;
                let alpha = 0.25 * (m + (m * m + 4.0 * k).sqrt());
                let den = (1.0 + 2.0 * alpha).powi(2) * delta - 1.0;
                if !(den > 0.0) {
                    return Err(Error::Regime(format!("ridge nearly black limit undefined at delta = {delta}")));
                }
                let limit = (delta * sigma * sigma + 4.0 * delta * alpha * alpha * c * c) / den;
                return done(limit / c, format!("AMSE / (eps^{{1/2}} b); AMSE itself tends to {limit}"));
            }
            let (c_star, v) = minimize_nearly_black_h(q, c, prior, sigma)?;
            done(v, format!("AMSE / (eps^{{1/q}} b^{{2(q-1)/q}}), min_C h(C) attained at C = {c_star}"))
        }
    }
}

fn check_ratio(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(domain(format!("limit ratio c must be positive and finite, got {c}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::NonzeroLaw;

    fn m1_grid_oracle(eps: f64) -> f64 {
        (0..=400_000)
            .map(|k| {
                let chi = k as f64 * 1e-5;
                (1.0 - eps) * soft_null_risk(chi) + eps * (1.0 + chi * chi)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn m1_values() {
        assert_eq!(m1(1.0).unwrap(), 1.0);
        assert_eq!(m1(0.0).unwrap(), 0.0);
        for eps in [0.2, 0.4, 0.5] {
            let v = m1(eps).unwrap();
            assert!((v - m1_grid_oracle(eps)).abs() < 1e-9, "eps={eps}");
        }
        assert!((m1(0.2).unwrap() - 0.5111296103730968).abs() < 1e-12);
        let mut last = 0.0;
        for k in 1..20 {
            let v = m1(k as f64 / 20.0).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn cq_values() {
        assert!((cq(2.0).unwrap() - 1.0).abs() < 1e-12);
        let e1 = (2.0 / std::f64::consts::PI).sqrt();
        assert!((cq(1.5).unwrap() - e1 * e1 / (0.25 * 3.0)).abs() < 1e-13);
        assert!((cq(1.5).unwrap() - 0.8488263631567754).abs() < 1e-12);
        for k in 1..=300 {
            let q = 1.0 + k as f64 * 0.01;
            assert!(cq(q).unwrap() <= 1.0 + 1e-12);
        }
        assert!(cq(1.01).unwrap().is_finite());
    }

    #[test]
    fn c0_root() {
        let p = SignalPrior::point_mass(0.2, 1.0).unwrap();
        let c = c0(&p).unwrap();
        let f = |x: f64| x.exp() * (x - 1.0) - (-x).exp() * (x + 1.0) - 8.0;
        assert!(f(c * (1.0 - 1e-9)) < 0.0 && f(c * (1.0 + 1e-9)) > 0.0);
        // Dense-grid oracle.
        let grid = (0..400_000).map(|k| k as f64 * 1e-5).find(|&x| f(x) > 0.0).unwrap();
        assert!((grid - c).abs() < 1e-5);
        let mut last = f64::INFINITY;
        for eps in [0.01, 0.1, 0.3, 0.6, 0.9, 0.999] {
            let c = c0(&SignalPrior::point_mass(eps, 1.0).unwrap()).unwrap();
            assert!(c < last);
            last = c;
        }
        assert!(c0(&SignalPrior::point_mass(1.0, 1.0).unwrap()).is_err());
        assert!(c0(&SignalPrior::point_mass(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn large_noise_plug_in() {
        let p = SignalPrior::point_mass(0.2, 1.0).unwrap();
        let r = amse_large_noise(2.0, &p, 10.0).unwrap();
        assert!((r.total() - 0.1996).abs() < 1e-14);
        assert_eq!(amse_large_noise(1.0, &p, 10.0).unwrap().second_order, 0.0);
        assert_eq!(amse_large_noise(1.5, &p, 3.0).unwrap().leading, amse_large_noise(1.5, &p, 30.0).unwrap().leading);
    }

    #[test]
    fn low_noise_plug_in() {
        let p = SignalPrior::point_mass(0.2, 1.0).unwrap();
        let s = 0.1;
        let r = amse_low_noise(&ModelParams::new(2.0, s, 2.0).unwrap(), &p).unwrap();
        assert!((r.second_order + 40.0 * s.powi(4)).abs() < 1e-15);
        let m = m1(0.2).unwrap();
        let r1 = amse_low_noise(&ModelParams::new(2.0, s, 1.0).unwrap(), &p).unwrap();
        assert!((r1.leading - 2.0 * m * s * s / (2.0 - m)).abs() < 1e-15);
        let p4 = SignalPrior::point_mass(0.4, 1.0).unwrap();
        let m4 = m1(0.4).unwrap();
        assert!(m4 > 0.5);
        assert!(matches!(amse_low_noise(&ModelParams::new(0.5, s, 1.0).unwrap(), &p4), Err(Error::Regime(_))));
        assert!(matches!(amse_low_noise(&ModelParams::new(0.9, s, 1.5).unwrap(), &p4), Err(Error::Regime(_))));
    }

    #[test]
    fn large_sample_plug_in() {
        let p = SignalPrior::point_mass(0.5, 1.0).unwrap();
        let delta = 7.0;
        let r = amse_large_sample(&ModelParams::new(delta, 1.0, 2.0).unwrap(), &p).unwrap();
        assert!((r.total() - (1.0 / delta + (1.0 / (delta * delta)) * (1.0 - 2.0))).abs() < 1e-15);
        let r1 = amse_large_sample(&ModelParams::new(delta, 1.0, 1.0).unwrap(), &p).unwrap();
        assert!((r1.leading - m1(0.5).unwrap() / delta).abs() < 1e-15);
        for q in [1.3, 2.0, 3.0] {
            let r = amse_large_sample(&ModelParams::new(delta, 1.0, q).unwrap(), &p).unwrap();
            assert_eq!(r.leading, 1.0 / delta);
        }
    }

    #[test]
    fn sparse_coefficient_ridge_closed_form() {
        for (m, sigma) in [(1.0, 1.0), (2.0, 0.7), (3.0, 2.0)] {
            let p = SignalPrior::point_mass(0.1, m).unwrap();
            let c = sparse_second_order(2.0, &p, sigma).unwrap();
            // E(|μ + Z| sgn(μ + Z)) = μ, so the coefficient is M²(M/σ)².
            assert!((c - m.powi(4) / (sigma * sigma)).abs() < 1e-10 * c, "m={m}");
        }
        // For q = 1.5, E(X|X|) with X ~ N(μ, 1) is (μ² + 1)(1 − 2Φ(−μ)) + 2μφ(μ).
        for (m, sigma) in [(1.0, 1.0), (2.5, 0.8)] {
            let p = SignalPrior::point_mass(0.1, m).unwrap();
            let mu: f64 = m / sigma;
            let e = (mu * mu + 1.0) * (1.0 - 2.0 * cdf(-mu)) + 2.0 * mu * pdf(mu);
            let oracle = (m * e).powi(2) / 3.0;
            let c = sparse_second_order(1.5, &p, sigma).unwrap();
            assert!((c - oracle).abs() < 1e-10 * oracle, "{c} vs {oracle}");
        }
        let p = SignalPrior::point_mass(0.1, 1.0).unwrap();
        for k in 2..=300 {
            let c = sparse_second_order(1.0 + k as f64 * 0.01, &p, 1.0).unwrap();
            assert!(c.is_finite() && c > 0.0, "k={k}");
        }
    }

    #[test]
    fn nearly_black_constants() {
        let p = SignalPrior::point_mass(0.01, 5.0).unwrap();
        assert_eq!(nearly_black_rate(1.5, NearlyBlackCase::LittleO, &p, 1.0, None).unwrap().leading, 1.0);
        let omega = nearly_black_rate(1.0, NearlyBlackCase::Omega, &p, 1.3, None).unwrap().leading;
        assert!((omega - 3.38).abs() < 1e-14);
        assert!(nearly_black_rate(3.0, NearlyBlackCase::Omega, &p, 1.0, None).is_err());
        assert!(nearly_black_rate(3.0, NearlyBlackCase::Theta(1.0), &p, 1.0, None).is_err());
        assert!(nearly_black_rate(2.0, NearlyBlackCase::Omega, &p, 1.0, None).is_err());
        assert!(nearly_black_rate(2.0, NearlyBlackCase::Theta(1.0), &p, 1.0, None).is_err());
        assert!(nearly_black_rate(2.0, NearlyBlackCase::Theta(1.0), &p, 1.0, Some(2.0)).is_ok());
    }

    #[test]
    fn h_minimum_matches_grid_oracle() {
        let p = SignalPrior::new(0.05, NonzeroLaw::DiscreteAtoms { values: vec![1.0, 3.0], weights: vec![0.5, 0.5] }, 1.0).unwrap();
        for (q, c, sigma) in [(1.5, 1.0, 1.0), (1.2, 0.5, 0.8), (1.8, 2.0, 1.5)] {
            let (_, v) = minimize_nearly_black_h(q, c, &p, sigma).unwrap();
            let oracle = (0..10_000)
                .map(|k| nearly_black_h(10f64.powf(-4.0 + 8.0 * k as f64 / 9_999.0), q, c, &p, sigma).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(v <= oracle + 1e-12, "q={q}: {v} vs {oracle}");
            assert!(oracle - v < 1e-4 * oracle, "q={q}: {v} vs {oracle}");
            let r = nearly_black_rate(q, NearlyBlackCase::Theta(c), &p, sigma, None).unwrap();
            assert_eq!(r.leading, v);
        }
    }

    #[test]
    fn c_star_balances_omega_case() {
        // With a linearized bias term, C* minimizes the reduced objective
        // and the omega constant is its minimum value.
        let p = SignalPrior::point_mass(0.01, 2.0).unwrap();
        for q in [1.2, 1.5, 1.8] {
            let sigma: f64 = 0.9;
            let cs = nearly_black_c_star(q, &p, sigma).unwrap();
            let g = normalized_moment(&p, 2.0 * q - 2.0);
            let ez = abs_moment(2.0 / (q - 1.0)).unwrap();
            let f = |c: f64| (c * q).powf(-2.0 / (q - 1.0)) * sigma * sigma * ez + (c * q).powi(2) * sigma.powf(4.0 - 2.0 * q) * g;
            let omega = nearly_black_rate(q, NearlyBlackCase::Omega, &p, sigma, None).unwrap().leading;
            assert!((f(cs) - omega).abs() < 1e-10 * omega, "q={q}: {} vs {omega}", f(cs));
            assert!(f(cs * 1.01) > f(cs) && f(cs * 0.99) > f(cs));
        }
    }
}
