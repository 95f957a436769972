//! Sparse signal law `p_B = (1 − ε)δ₀ + ε p_G` and Gaussian expectations.

use crate::error::{domain, Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;
use std::f64::consts::PI;

/// Law of a nonzero coefficient before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonzeroLaw {
    PointMass { m: f64 },
    DiscreteAtoms { values: Vec<f64>, weights: Vec<f64> },
}

/// `B = 0` with probability `1 − ε`, otherwise `scale·G` with `G ~ p_G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalPrior {
    pub epsilon: f64,
    pub nonzero: NonzeroLaw,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl SignalPrior {
    pub fn new(epsilon: f64, nonzero: NonzeroLaw, scale: f64) -> Result<Self> {
        let prior = Self { epsilon, nonzero, scale };
        prior.validate()?;
        Ok(prior)
    }

    pub fn point_mass(epsilon: f64, m: f64) -> Result<Self> {
        Self::new(epsilon, NonzeroLaw::PointMass { m }, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(domain(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(domain(format!("scale must be positive and finite, got {}", self.scale)));
        }
        match &self.nonzero {
            NonzeroLaw::PointMass { m } => {
                if !(*m > 0.0) || !m.is_finite() {
                    return Err(domain(format!("point mass location must be positive, got {m}")));
                }
            }
            NonzeroLaw::DiscreteAtoms { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(domain("atoms and weights must be non-empty and of equal length"));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(domain("atoms must be strictly positive and finite"));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(domain("atom weights must be nonnegative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(domain(format!("atom weights must sum to 1, got {total}")));
                }
            }
        }
        Ok(())
    }

    /// Scaled atoms `scale·g_i` with their weights.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.nonzero {
            NonzeroLaw::PointMass { m } => vec![(self.scale * m, 1.0)],
            NonzeroLaw::DiscreteAtoms { values, weights } => values
                .iter()
                .zip(weights)
                .map(|(v, w)| (self.scale * v, *w))
                .collect(),
        }
    }

    /// `E|G|^r` of the scaled nonzero law.
    pub fn nonzero_moment(&self, r: f64) -> f64 {
        self.atoms().iter().map(|(g, w)| w * g.powf(r)).sum()
    }

    /// `E B² = ε E G²`.
    pub fn second_moment(&self) -> f64 {
        self.epsilon * self.nonzero_moment(2.0)
    }

    /// Atoms of `G̃ = G / √(E G²)`, normalized to unit second moment.
    pub fn normalized_atoms(&self) -> Vec<(f64, f64)> {
        let b = self.nonzero_moment(2.0).sqrt();
        self.atoms().into_iter().map(|(g, w)| (g / b, w)).collect()
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms().iter().map(|a| a.0).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Probabilists' Gauss–Hermite rule, exact for polynomials.
    GaussHermite,
    /// Composite Gauss–Legendre on `[−H, H]` with unit panels, refined
    /// geometrically toward the integrand's kink.
    Panels,
}

/// Quadrature rule for `E f(μ + τZ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: RuleKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
    half_width: f64,
}

const GRADING_LEVELS: i32 = 22;
const MAX_GRADING_LEVELS: i32 = 60;

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::panels(21, 10.0)
    }
}

impl QuadratureRule {
    /// Gauss–Hermite rule for the standard normal weight; weights sum to 1.
    pub fn gauss_hermite(order: usize) -> Self {
        let n = order.max(1);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            kind: RuleKind::GaussHermite,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
            order: n,
            half_width: f64::INFINITY,
        }
    }

    /// Composite Gauss–Legendre rule with `order` nodes per panel on `[−H, H]`.
    pub fn panels(order: usize, half_width: f64) -> Self {
        let (nodes, weights) = gauss_legendre(order.max(1));
        Self { kind: RuleKind::Panels, nodes, weights, order: order.max(1), half_width }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Base nodes: standard-normal nodes for Gauss–Hermite, `[−1, 1]` nodes per panel otherwise.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same family with twice the order.
    pub fn doubled(&self) -> Self {
        match self.kind {
            RuleKind::GaussHermite => Self::gauss_hermite(2 * self.order),
            RuleKind::Panels => Self::panels(2 * self.order, self.half_width),
        }
    }

    pub fn with_half_width(&self, half_width: f64) -> Self {
        let mut rule = self.clone();
        rule.half_width = half_width;
        rule
    }

    /// Panel boundaries on `[lo, hi]`, graded toward each kink down to width `fine`.
    fn boundaries(&self, lo: f64, hi: f64, kinks: &[f64], fine: f64) -> Vec<f64> {
        let levels = if fine > 0.0 && fine < 1.0 {
            ((1.0 / fine).log2().ceil() as i32 + 3).clamp(GRADING_LEVELS, MAX_GRADING_LEVELS)
        } else {
            GRADING_LEVELS
        };
        let mut cuts: Vec<f64> = vec![lo, hi];
        let mut x = lo.ceil();
        while x < hi {
            cuts.push(x);
            x += 1.0;
        }
        for &k in kinks {
            if k > lo && k < hi {
                cuts.push(k);
            }
            for j in 1..=levels {
                let h = 0.5f64.powi(j);
                for c in [k - h, k + h] {
                    if c > lo && c < hi {
                        cuts.push(c);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        cuts
    }

    /// `∫_lo^hi f(z) φ(z) dz` over graded panels; `kinks` are in `z` units.
    #[cfg(test)]
    pub(crate) fn integrate_z<F>(&self, lo: f64, hi: f64, kinks: &[f64], mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        Ok(self.integrate_z_n(lo, hi, kinks, 1.0, |z| Ok([f(z)?]))?[0])
    }

    /// `∫_lo^hi f(z) φ(z) dz` for `N` integrands at once.
    pub(crate) fn integrate_z_n<const N: usize, F>(&self, lo: f64, hi: f64, kinks: &[f64], fine: f64, mut f: F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> Result<[f64; N]>,
    {
        let norm = 1.0 / (2.0 * PI).sqrt();
        let cuts = self.boundaries(lo, hi, kinks, fine);
        let mut total = [0.0; N];
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut panel = [0.0; N];
            for (t, w) in self.nodes.iter().zip(&self.weights) {
                let z = mid + half * t;
                let v = f(z)?;
                let wz = w * (-0.5 * z * z).exp();
                for k in 0..N {
                    panel[k] += wz * v[k];
                }
            }
            for k in 0..N {
                total[k] += half * panel[k];
            }
        }
        for t in total.iter_mut() {
            *t *= norm;
        }
        Ok(total)
    }

    /// `E f(μ + τZ)` where `f` may fail and is known to kink at the points `kinks_x`.
    pub(crate) fn try_expect<F>(&self, mu: f64, tau: f64, kinks_x: &[f64], mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        Ok(self.try_expect_n(mu, tau, kinks_x, f64::INFINITY, |x| Ok([f(x)?]))?[0])
    }

    /// Vector-valued `E f(μ + τZ)`; `fine_x` is the width (in `x` units) of the
    /// narrowest feature around the kinks.
    pub(crate) fn try_expect_n<const N: usize, F>(&self, mu: f64, tau: f64, kinks_x: &[f64], fine_x: f64, mut f: F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> Result<[f64; N]>,
    {
        let mut checked = |x: f64| -> Result<[f64; N]> {
            let v = f(x)?;
            match v.iter().find(|c| !c.is_finite()) {
                None => Ok(v),
                Some(bad) => Err(Error::Numeric { context: format!("non-finite integrand at node x = {x}"), residual: *bad }),
            }
        };
        match self.kind {
            RuleKind::GaussHermite => {
                let mut total = [0.0; N];
                for (z, w) in self.nodes.iter().zip(&self.weights) {
                    let v = checked(mu + tau * z)?;
                    for k in 0..N {
                        total[k] += w * v[k];
                    }
                }
                Ok(total)
            }
            RuleKind::Panels => {
                let kinks: Vec<f64> = kinks_x.iter().map(|k| (k - mu) / tau).collect();
                let h = self.half_width;
                self.integrate_z_n(-h, h, &kinks, fine_x / tau, |z| checked(mu + tau * z))
            }
        }
    }

    /// `E f(τZ)` for an even `f` with a kink at the origin, using half the nodes.
    pub(crate) fn try_expect_even_n<const N: usize, F>(&self, tau: f64, fine_x: f64, mut f: F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> Result<[f64; N]>,
    {
        match self.kind {
            RuleKind::GaussHermite => self.try_expect_n(0.0, tau, &[0.0], fine_x, f),
            RuleKind::Panels => {
                let half = self.integrate_z_n(0.0, self.half_width, &[0.0], fine_x / tau, |z| {
                    let x = tau * z;
                    let v = f(x)?;
                    match v.iter().find(|c| !c.is_finite()) {
                        None => Ok(v),
                        Some(bad) => Err(Error::Numeric { context: format!("non-finite integrand at node x = {x}"), residual: *bad }),
                    }
                })?;
                Ok(half.map(|h| 2.0 * h))
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `E f(μ + τZ)` for standard normal `Z`.
pub fn expect_gaussian<F: Fn(f64) -> f64>(f: F, mu: f64, tau: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    rule.try_expect(mu, tau, &[0.0], |x| Ok(f(x)))
}

/// `E f(B, Z)` with `B ~ prior` independent of `Z ~ N(0, 1)`.
pub fn expect_prior<F: Fn(f64, f64) -> f64>(f: F, prior: &SignalPrior, rule: &QuadratureRule) -> Result<f64> {
    prior.validate()?;
    let mut total = 0.0;
    if prior.epsilon < 1.0 {
        total += (1.0 - prior.epsilon) * expect_gaussian(|z| f(0.0, z), 0.0, 1.0, rule)?;
    }
    if prior.epsilon > 0.0 {
        for (g, w) in prior.atoms() {
            total += prior.epsilon * w * expect_gaussian(|z| f(g, z), 0.0, 1.0, rule)?;
        }
    }
    Ok(total)
}

/// `E|Z|^r = 2^{r/2} Γ((r + 1)/2) / √π` for `r > −1`.
pub fn abs_moment(r: f64) -> Result<f64> {
    if !(r > -1.0) || !r.is_finite() {
        return Err(domain(format!("E|Z|^r diverges for r = {r}")));
    }
    Ok((0.5 * r * 2f64.ln() + ln_gamma(0.5 * (r + 1.0)) - 0.5 * PI.ln()).exp())
}
