//! Scalar proximal operator of the bridge penalty `χ|z|^q` for `q >= 1`.
//!
//! `η_q(u; χ) = argmin_z ½(u − z)² + χ|z|^q`. The map is odd in `u`, so the
//! solvers work on `|u|` and restore the sign at the end.

use crate::error::{domain, Error, Result};

const MAX_ITERS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// A single evaluation point of the proximal operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxQuery {
    pub u: f64,
    pub chi: f64,
    pub q: f64,
}

impl ProxQuery {
    pub fn new(u: f64, chi: f64, q: f64) -> Result<Self> {
        let query = Self { u, chi, q };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.u.is_finite() {
            return Err(domain(format!("prox input u must be finite, got {}", self.u)));
        }
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(domain(format!("penalty weight chi must be finite and >= 0, got {}", self.chi)));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(domain(format!("bridge exponent q must be >= 1, got {}", self.q)));
        }
        Ok(())
    }

    pub fn eval(&self) -> Result<f64> {
        prox_bridge(self.u, self.chi, self.q)
    }
}

/// Soft threshold `sgn(u)(|u| − χ)₊`.
#[inline]
pub fn soft_threshold(u: f64, chi: f64) -> f64 {
    if u > chi {
        u - chi
    } else if u < -chi {
        u + chi
    } else {
        0.0
    }
}

/// Hard threshold `u·1{|u| >= s}`.
#[inline]
pub fn hard_threshold(u: f64, s: f64) -> f64 {
    if u.abs() >= s {
        u
    } else {
        0.0
    }
}

/// Minimizer of `½(u − z)² + χ|z|^q`.
pub fn prox_bridge(u: f64, chi: f64, q: f64) -> Result<f64> {
    ProxQuery { u, chi, q }.validate()?;
    if q == 1.0 {
        return Ok(soft_threshold(u, chi));
    }
    if q == 2.0 {
        return Ok(u / (1.0 + 2.0 * chi));
    }
    if u == 0.0 || chi == 0.0 {
        return Ok(u);
    }
    let z = solve_stationary(u.abs(), chi * q, q)?;
    Ok(z.copysign(u))
}

/// Positive root of `z + k z^{q−1} = a` for `a > 0`, `k > 0`, `q > 1`.
///
/// The left side is increasing on `(0, a]`. It is concave for `q < 2` and
/// convex for `q > 2`, so Newton started from the left (resp. right) end of
/// the bracket approaches the root monotonically. Bisection takes over
/// whenever a step leaves the bracket.
pub(crate) fn solve_stationary(a: f64, k: f64, q: f64) -> Result<f64> {
    let r = 1.0 / (q - 1.0);
    let g = |z: f64| z + k * z.powf(q - 1.0) - a;
    let mut lo = (0.5 * a).min((0.5 * a / k).powf(r));
    let mut hi = a.min((a / k).powf(r));
    if !(lo >= 0.0) || !hi.is_finite() {
        return Err(Error::Numeric { context: "prox bracket".into(), residual: f64::NAN });
    }
    if hi <= lo {
        return Ok(hi);
    }
    let mut z = if q < 2.0 { lo } else { hi };
    for _ in 0..MAX_ITERS {
        let gz = g(z);
        if gz == 0.0 {
            return Ok(z);
        }
        if gz < 0.0 {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        let slope = 1.0 + k * (q - 1.0) * z.powf(q - 2.0);
        let mut next = z - gz / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
            if next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
        }
        let step = (next - z).abs();
        z = next;
        if step <= 4.0 * f64::EPSILON * z || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let residual = g(z).abs();
    if residual > RESIDUAL_TOL * (1.0 + a) {
        return Err(Error::Numeric { context: "prox Newton solve".into(), residual });
    }
    Ok(z)
}

/// `∂η_q/∂u`. For `q = 1` this is the indicator of `|u| > χ`.
pub fn prox_deriv_u(u: f64, chi: f64, q: f64) -> Result<f64> {
    ProxQuery { u, chi, q }.validate()?;
    if q == 1.0 {
        if u.abs() == chi {
            return Err(domain(format!("soft threshold is not differentiable at |u| = chi = {chi}")));
        }
        return Ok(if u.abs() > chi { 1.0 } else { 0.0 });
    }
    let eta = prox_bridge(u, chi, q)?;
    Ok(deriv_u_at(eta, chi, q))
}

/// `∂η_q/∂χ`, defined for `q > 1`.
pub fn prox_deriv_chi(u: f64, chi: f64, q: f64) -> Result<f64> {
    ProxQuery { u, chi, q }.validate()?;
    if q == 1.0 {
        return Err(Error::Unsupported("derivative in chi is only defined for q > 1".into()));
    }
    let eta = prox_bridge(u, chi, q)?;
    Ok(deriv_chi_at(eta, chi, q))
}

/// `∂₁η` expressed through the prox value `eta` (for `q > 1`).
#[inline]
pub(crate) fn deriv_u_at(eta: f64, chi: f64, q: f64) -> f64 {
    if chi == 0.0 {
        return 1.0;
    }
    let a = eta.abs();
    if a == 0.0 {
        return if q < 2.0 { 0.0 } else if q == 2.0 { 1.0 / (1.0 + 2.0 * chi) } else { 1.0 };
    }
    1.0 / (1.0 + chi * q * (q - 1.0) * a.powf(q - 2.0))
}

/// `∂₂η` expressed through the prox value `eta` (for `q > 1`).
#[inline]
pub(crate) fn deriv_chi_at(eta: f64, chi: f64, q: f64) -> f64 {
    let a = eta.abs();
    if a == 0.0 {
        return 0.0;
    }
    -q * a.powf(q - 1.0) * eta.signum() * deriv_u_at(eta, chi, q)
}
