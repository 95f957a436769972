//! Bridge regression under proportional asymptotics: exact state evolution,
//! optimal tuning, selection trade-off curves, closed-form expansions, and
//! finite-sample solvers with a Monte Carlo harness to check them against.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod normal;
pub mod optimize;
pub mod pipeline;
pub mod prior;
pub mod prox;
pub mod selection;
pub mod solver;
pub mod state_evolution;

pub use asymptotics::{ExpansionResult, NearlyBlackCase, Regime};
pub use error::{Error, Result};
pub use solver::{FitResult, RegressionProblem};
pub use prior::{abs_moment, expect_gaussian, expect_prior, NonzeroLaw, QuadratureRule, SignalPrior};
pub use prox::{hard_threshold, prox_bridge, prox_deriv_chi, prox_deriv_u, ProxQuery};
pub use state_evolution::{
    fixed_point_tau, lambda_from_alpha, optimal_tuning, risk, solve_given_lambda, ModelParams, SEFixedPoint,
};
pub use selection::{
    build_curve, debiased_point, lasso_point, sis_point, threshold_for_atpp, two_stage_point, CurveOptions, Method,
    ThresholdContext, TradeoffCurve, TradeoffPoint, Tuning,
};
