//! Finite-sample bridge regression `argmin ½‖y − Xβ‖² + λ‖β‖_q^q`.

mod amp;
mod cd;
mod estimate;
mod tune;

pub use amp::{fit_amp, AmpOptions};
pub use cd::{fit_coordinate_descent, CdOptions};
pub use estimate::{debias, degrees_of_freedom, gamma_hat, tau_hat};
pub use tune::{tune_lambda, TuneOptions};

use crate::error::{domain, Result};
use nalgebra::{DMatrix, DVector};

/// Design matrix and response of one regression instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl RegressionProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(domain(format!("design has {} rows but response has {} entries", x.nrows(), y.len())));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(domain("design must be non-empty"));
        }
        if let Some(bad) = x.iter().chain(y.iter()).find(|v| !v.is_finite()) {
            return Err(domain(format!("design and response must be finite, found {bad}")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn delta(&self) -> f64 {
        self.n() as f64 / self.p() as f64
    }

    pub fn residual(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.x * beta
    }

    /// `½‖y − Xβ‖² + λ‖β‖_q^q`.
    pub fn objective(&self, beta: &DVector<f64>, q: f64, lambda: f64) -> f64 {
        0.5 * self.residual(beta).norm_squared() + lambda * penalty(beta, q)
    }

    /// Largest violation of the stationarity conditions at `beta`.
    ///
    /// For `q > 1` this is `‖Xᵀ(Xβ − y) + λq sgn(β)|β|^{q−1}‖∞`; for `q = 1`
    /// the distance of `−Xᵀ(Xβ − y)` from the subdifferential of `λ‖β‖₁`.
    pub fn kkt_residual(&self, beta: &DVector<f64>, q: f64, lambda: f64) -> f64 {
        let corr = self.x.tr_mul(&self.residual(beta));
        corr.iter()
            .zip(beta.iter())
            .map(|(&c, &b)| {
                if q == 1.0 {
                    if b != 0.0 {
                        (c - lambda * b.signum()).abs()
                    } else {
                        (c.abs() - lambda).max(0.0)
                    }
                } else {
                    (c - lambda * q * b.abs().powf(q - 1.0) * b.signum()).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// `‖Xᵀy‖∞`, the smallest `λ` with a zero LASSO solution.
    pub fn lambda_max(&self) -> f64 {
        self.x.tr_mul(&self.y).amax()
    }
}

fn penalty(beta: &DVector<f64>, q: f64) -> f64 {
    if q == 1.0 {
        beta.lp_norm(1)
    } else {
        beta.iter().map(|b| b.abs().powf(q)).sum()
    }
}

/// A fitted bridge estimator with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub q: f64,
    pub lambda: f64,
    /// Coordinate passes for descent, iterations for AMP.
    pub passes: usize,
    pub kkt_residual: f64,
    pub tau_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    /// The LASSO support reached `n`; `τ̂²` is then taken to be infinite.
    pub saturated: bool,
}

impl FitResult {
    pub fn support_size(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    /// `‖β̂ − β‖² / p`.
    pub fn mse(&self, beta_true: &DVector<f64>) -> f64 {
        (&self.beta - beta_true).norm_squared() / self.beta.len() as f64
    }
}
