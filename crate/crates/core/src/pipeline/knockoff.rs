//! Fixed-X knockoff filter on top of a bridge fit.

use super::config::{ExperimentConfig, TuningSpec};
use super::curve::tpp_fdp;
use super::data::{stream, DataGenerator, Purpose};
use crate::error::{Error, Result};
use crate::prior::SignalPrior;
use crate::solver::{fit_coordinate_descent, tune_lambda, CdOptions, RegressionProblem, TuneOptions};
use crate::state_evolution::{optimal_tuning, ModelParams};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `W_j = max(|a|, |b|) · sgn(|a| − |b|)`.
pub fn contrast(original: f64, knockoff: f64) -> f64 {
    let (a, b) = (original.abs(), knockoff.abs());
    let m = a.max(b);
    if a > b {
        m
    } else if a < b {
        -m
    } else {
        0.0
    }
}

/// Smallest `t > 0` among the `|W_j|` with
/// `(1 + #{W_j ≤ −t}) / max(#{W_j ≥ t}, 1) ≤ target`.
pub fn knockoff_threshold(w: &[f64], target: f64) -> Option<f64> {
    let mut candidates: Vec<f64> = w.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.into_iter().find(|&t| {
        let neg = w.iter().filter(|v| **v <= -t).count();
        let pos = w.iter().filter(|v| **v >= t).count();
        (1 + neg) as f64 / pos.max(1) as f64 <= target
    })
}

/// Equicorrelated fixed-X knockoffs for the column-normalized design.
///
/// Returns `(X_n, X̃)` where `X_n` has unit-norm columns. `noise` supplies the
/// directions orthogonal to the column span of `X`.
pub fn equicorrelated_knockoffs(x: &DMatrix<f64>, noise: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 2 * p {
        return Err(Error::Unsupported(format!("fixed-X knockoffs need n >= 2p, got n = {n}, p = {p}")));
    }
    let mut xn = x.clone();
    for mut col in xn.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::Design("design has a zero column".into()));
        }
        col /= norm;
    }
    let gram = xn.tr_mul(&xn);
    let eig_min = gram.clone().symmetric_eigenvalues().min();
    if !(eig_min > 1e-10) {
        return Err(Error::Design(format!("design Gram matrix is singular (smallest eigenvalue {eig_min:e})")));
    }
    let s = (2.0 * eig_min).min(1.0);
    let gram_inv = gram.cholesky().ok_or_else(|| Error::Design("Gram matrix not positive definite".into()))?.inverse();
    // CᵀC = 2sI − s²Σ⁻¹, computed as a symmetric square root.
    let a = DMatrix::identity(p, p) * (2.0 * s) - &gram_inv * (s * s);
    let eig = a.symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let c = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let mut stacked = DMatrix::zeros(n, 2 * p);
    stacked.columns_mut(0, p).copy_from(&xn);
    stacked.columns_mut(p, p).copy_from(noise);
    let q = stacked.qr().q();
    let u = q.columns(p, p).into_owned();
    let x_tilde = &xn * (DMatrix::identity(p, p) - &gram_inv * s) + u * c;
    Ok((xn, x_tilde))
}

/// Indices selected by the knockoff filter at level `fdr_target`.
///
/// The bridge estimator is fitted jointly on `[X, X̃]` at penalty `lambda`.
pub fn knockoff_select(problem: &RegressionProblem, q: f64, lambda: f64, fdr_target: f64) -> Result<Vec<usize>> {
    let noise = default_noise(problem.n(), problem.p());
    knockoff_select_with(problem, q, Some(lambda), fdr_target, &noise)
}

fn default_noise(n: usize, p: usize) -> DMatrix<f64> {
    let mut rng = stream(0, 0, Purpose::Knockoff);
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// As [`knockoff_select`]; `lambda = None` picks the penalty minimizing `τ̂²`
/// on the augmented problem.
pub fn knockoff_select_with(problem: &RegressionProblem, q: f64, lambda: Option<f64>, fdr_target: f64, noise: &DMatrix<f64>) -> Result<Vec<usize>> {
    if !(fdr_target > 0.0 && fdr_target < 1.0) {
        return Err(Error::Domain(format!("fdr_target must lie in (0, 1), got {fdr_target}")));
    }
    let p = problem.p();
    let (xn, xt) = equicorrelated_knockoffs(problem.x(), noise)?;
    let mut joint = DMatrix::zeros(problem.n(), 2 * p);
    joint.columns_mut(0, p).copy_from(&xn);
    joint.columns_mut(p, p).copy_from(&xt);
    let augmented = RegressionProblem::new(joint, problem.y().clone())?;
    let fit = match lambda {
        Some(l) => fit_coordinate_descent(&augmented, q, l, &CdOptions::default())?.0,
        None => tune_lambda(&augmented, q, &TuneOptions::default())?.1,
    };
    let w: Vec<f64> = (0..p).map(|j| contrast(fit.beta[j], fit.beta[p + j])).collect();
    Ok(match knockoff_threshold(&w, fdr_target) {
        Some(t) => (0..p).filter(|&j| w[j] >= t).collect(),
        None => Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoffReplicate {
    pub index: u64,
    pub selected: usize,
    pub fdp: f64,
    pub tpp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoffReport {
    pub q: f64,
    pub lambda: Option<f64>,
    pub fdr_target: f64,
    pub replicates: Vec<KnockoffReplicate>,
    pub failures: Vec<(u64, String)>,
}

impl KnockoffReport {
    pub fn mean_fdp(&self) -> f64 {
        self.replicates.iter().map(|r| r.fdp).sum::<f64>() / self.replicates.len().max(1) as f64
    }

    pub fn mean_tpp(&self) -> f64 {
        self.replicates.iter().map(|r| r.tpp).sum::<f64>() / self.replicates.len().max(1) as f64
    }
}

/// State-evolution `λ*` for the augmented `n × 2p` problem, where half of
/// the `2p` coefficients are knockoff nulls.
pub fn augmented_optimal_lambda(config: &ExperimentConfig, q: f64) -> Result<f64> {
    let prior = SignalPrior { epsilon: config.prior.epsilon / 2.0, ..config.prior.clone() };
    let model = ModelParams::new(config.delta / 2.0, config.noise_sd(), q)?;
    Ok(optimal_tuning(&model, &prior)?.lambda)
}

/// Knockoff selection on every replicate, using the first configured method's
/// exponent and tuning.
pub fn run_knockoff(config: &ExperimentConfig) -> Result<KnockoffReport> {
    let target = config.fdr_target.ok_or_else(|| Error::Config("knockoff runs need fdr_target".into()))?;
    let spec = config.methods.first().ok_or_else(|| Error::Config("knockoff runs need one method entry".into()))?;
    let q = spec.q;
    let lambda = match spec.tuning {
        TuningSpec::Lambda(l) => Some(l),
        TuningSpec::Optimal => Some(augmented_optimal_lambda(config, q)?),
        TuningSpec::Estimated => None,
    };
    let gen = DataGenerator::new(config)?;
    if gen.config().n() < 2 * config.p {
        return Err(Error::Unsupported(format!("fixed-X knockoffs need n >= 2p, got n = {}, p = {}", config.n(), config.p)));
    }
    let results: Vec<Result<KnockoffReplicate>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|i| {
            let (problem, beta) = gen.generate(i)?;
            let mut rng = stream(config.seed, i, Purpose::Knockoff);
            let noise = DMatrix::from_fn(problem.n(), problem.p(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let sel = knockoff_select_with(&problem, q, lambda, target, &noise)?;
            let mut mask = vec![false; config.p];
            for &j in &sel {
                mask[j] = true;
            }
            let (tpp, fdp) = tpp_fdp(mask.into_iter(), &beta);
            Ok(KnockoffReplicate { index: i, selected: sel.len(), fdp, tpp })
        })
        .collect();
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => replicates.push(rep),
            Err(e) => failures.push((i as u64, e.to_string())),
        }
    }
    Ok(KnockoffReport { q, lambda, fdr_target: target, replicates, failures })
}
