use super::config::{ExperimentConfig, MethodSpec, TuningSpec};
use super::curve::{empirical_curve, tpp_fdp, EmpiricalCurve, EmpiricalPoint};
use super::data::DataGenerator;
use crate::error::{Error, Result};
use crate::selection::Method;
use crate::solver::{debias, fit_coordinate_descent, tune_lambda, CdOptions, FitResult, RegressionProblem, TuneOptions};
use crate::state_evolution::optimal_tuning;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of penalty levels on an empirical LASSO path.
const PATH_POINTS: usize = 60;
/// Smallest path penalty relative to `‖Xᵀy‖∞`.
const PATH_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub q: f64,
    pub atpp: f64,
    pub mean_fdp: f64,
    pub std_fdp: f64,
    pub mean_mse: f64,
    /// Replicates whose curve reached this TPP.
    pub reached: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStatus {
    pub index: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub replicates: Vec<ReplicateStatus>,
    /// Penalty used by each method when it does not depend on the replicate.
    pub lambdas: Vec<Option<f64>>,
}

impl ExperimentReport {
    pub fn failed(&self) -> usize {
        self.replicates.iter().filter(|r| !r.ok).count()
    }

    pub fn rows_for(&self, method: Method, q: f64) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.method == method && r.q == q)
    }
}

/// Per-replicate empirical curve of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub curve: EmpiricalCurve,
    pub lambda: f64,
}

/// State-evolution `λ*` for every method with `Optimal` tuning.
pub fn resolve_lambdas(config: &ExperimentConfig) -> Result<Vec<Option<f64>>> {
    config
        .methods
        .iter()
        .map(|m| match (m.method, m.tuning) {
            (Method::Sis, _) => Ok(None),
            (_, TuningSpec::Lambda(l)) => Ok(Some(l)),
            (_, TuningSpec::Estimated) => Ok(None),
            (_, TuningSpec::Optimal) => {
                let se = optimal_tuning(&config.model(m.q)?, &config.prior)?;
                if !se.lambda.is_finite() {
                    return Err(Error::Degenerate(format!("optimal penalty for q = {} is infinite", m.q)));
                }
                Ok(Some(se.lambda))
            }
        })
        .collect()
}

fn fit_at(problem: &RegressionProblem, q: f64, lambda: Option<f64>) -> Result<FitResult> {
    match lambda {
        Some(l) => Ok(fit_coordinate_descent(problem, q, l, &CdOptions::default())?.0),
        None => Ok(tune_lambda(problem, q, &TuneOptions::default())?.1),
    }
}

/// Support TPP/FDP along a descending LASSO path.
///
/// The path stops at saturation or at the first point whose TPP reaches
/// `tpp_ceiling`; the slow small-penalty tail is never needed beyond it.
pub fn lasso_path(problem: &RegressionProblem, beta_true: &DVector<f64>, mse: f64, tpp_ceiling: f64) -> Result<EmpiricalCurve> {
    let top = problem.lambda_max();
    let mut points = vec![EmpiricalPoint { s: top, tpp: 0.0, fdp: 0.0 }];
    let mut warm = None;
    for k in 1..PATH_POINTS {
        let lambda = top * PATH_FLOOR.powf(k as f64 / (PATH_POINTS - 1) as f64);
        let opts = CdOptions { warm_start: warm.take(), ..CdOptions::default() };
        let fit = match fit_coordinate_descent(problem, 1.0, lambda, &opts) {
            Ok((fit, _)) => fit,
            Err(Error::Numeric { .. }) => break,
            Err(e) => return Err(e),
        };
        if fit.saturated {
            break;
        }
        let (tpp, fdp) = tpp_fdp(fit.beta.iter().map(|b| *b != 0.0), beta_true);
        points.push(EmpiricalPoint { s: lambda, tpp, fdp });
        if tpp >= tpp_ceiling {
            break;
        }
        warm = Some(fit.beta);
    }
    Ok(EmpiricalCurve::from_points(points, mse))
}

/// Runs one method on one replicate. `tpp_ceiling` bounds the LASSO path.
pub fn run_method(
    spec: &MethodSpec,
    lambda: Option<f64>,
    problem: &RegressionProblem,
    beta_true: &DVector<f64>,
    tpp_ceiling: f64,
) -> Result<MethodOutcome> {
    if spec.method == Method::Sis {
        let est = problem.x().tr_mul(problem.y());
        return Ok(MethodOutcome { curve: empirical_curve(&est, beta_true), lambda: f64::INFINITY });
    }
    let fit = fit_at(problem, spec.q, lambda)?;
    let mse = fit.mse(beta_true);
    let curve = match spec.method {
        Method::Lasso => lasso_path(problem, beta_true, mse, tpp_ceiling)?,
        Method::TwoStage => empirical_curve(&fit.beta, beta_true),
        Method::DebiasedTwoStage => {
            let mut c = empirical_curve(&debias(problem, &fit)?, beta_true);
            c.mse = mse;
            c
        }
        Method::Sis => unreachable!(),
    };
    Ok(MethodOutcome { curve, lambda: fit.lambda })
}

fn run_replicate(gen: &DataGenerator, lambdas: &[Option<f64>], index: u64) -> Result<Vec<MethodOutcome>> {
    let (problem, beta) = gen.generate(index)?;
    let ceiling = gen.config().atpp_grid.iter().copied().fold(0.0, f64::max);
    gen.config().methods.iter().zip(lambdas).map(|(m, l)| run_method(m, *l, &problem, &beta, ceiling)).collect()
}

/// Monte Carlo replicates of every configured method, averaged on the ATPP grid.
///
/// Replicates run in parallel; results are folded in replicate order, so the
/// report does not depend on scheduling. Failed replicates are excluded and
/// listed in the status vector.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let gen = DataGenerator::new(config)?;
    let lambdas = resolve_lambdas(config)?;
    let outcomes: Vec<Result<Vec<MethodOutcome>>> =
        (0..config.replicates as u64).into_par_iter().map(|i| run_replicate(&gen, &lambdas, i)).collect();
    let replicates = outcomes
        .iter()
        .enumerate()
        .map(|(i, r)| ReplicateStatus { index: i as u64, ok: r.is_ok(), error: r.as_ref().err().map(|e| e.to_string()) })
        .collect();
    let good: Vec<&Vec<MethodOutcome>> = outcomes.iter().filter_map(|r| r.as_ref().ok()).collect();
    let mut rows = Vec::new();
    for (m, spec) in config.methods.iter().enumerate() {
        let mses: Vec<f64> = good.iter().map(|o| o[m].curve.mse).collect();
        let mean_mse = mean(&mses);
        for &zeta in &config.atpp_grid {
            let fdps: Vec<f64> = good.iter().filter_map(|o| o[m].curve.fdp_at(zeta)).collect();
            rows.push(ReportRow {
                method: spec.method,
                q: spec.q,
                atpp: zeta,
                mean_fdp: mean(&fdps),
                std_fdp: sample_sd(&fdps),
                mean_mse,
                reached: fdps.len(),
            });
        }
    }
    Ok(ExperimentReport { rows, replicates, lambdas })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        1 => 0.0,
        k => {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::{DesignSpec, NoiseScaling};
    use crate::prior::SignalPrior;

    fn config(replicates: usize) -> ExperimentConfig {
        ExperimentConfig {
            p: 120,
            delta: 0.8,
            prior: SignalPrior::point_mass(0.3, 1.0).unwrap(),
            sigma: 0.3,
            noise_scaling: NoiseScaling::Plain,
            design: DesignSpec::default(),
            methods: vec![
                MethodSpec { method: Method::Lasso, q: 1.0, tuning: TuningSpec::Optimal },
                MethodSpec { method: Method::TwoStage, q: 2.0, tuning: TuningSpec::Optimal },
                MethodSpec { method: Method::DebiasedTwoStage, q: 1.0, tuning: TuningSpec::Lambda(0.3) },
                MethodSpec { method: Method::Sis, q: 1.0, tuning: TuningSpec::Optimal },
            ],
            replicates,
            seed: 11,
            atpp_grid: vec![0.2, 0.5, 0.8],
            fdr_target: None,
        }
    }

    #[test]
    fn single_replicate_has_zero_std() {
        let r = run_experiment(&config(1)).unwrap();
        assert_eq!(r.failed(), 0);
        assert!(r.rows.iter().filter(|row| row.reached == 1).all(|row| row.std_fdp == 0.0));
        assert_eq!(r.rows.len(), 12);
    }

    #[test]
    fn report_is_reproducible() {
        let a = run_experiment(&config(3)).unwrap();
        let b = run_experiment(&config(3)).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let c = pool.install(|| run_experiment(&config(3)).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn sample_sd_matches_definition() {
        assert_eq!(sample_sd(&[1.0, 3.0]), 2f64.sqrt());
        assert!(mean(&[]).is_nan());
    }
}
