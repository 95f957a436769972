//! Subcommand bodies. Each writes its tables into `out` and returns the manifest.

use bridgelab::asymptotics::{
    amse_extreme_sparse, amse_large_noise, amse_large_sample, amse_low_noise, cq, nearly_black_rate, ExpansionResult,
};
use bridgelab::pipeline::{run_experiment, run_knockoff, ExperimentConfig};
use bridgelab::state_evolution::{optimal_tuning, solve_given_lambda, ModelParams};
use bridgelab::{build_curve, CurveOptions, SignalPrior};
use serde_json::json;
use std::path::Path;

use crate::config::{AsymptoteConfig, AsymptoteRegime, LambdaMapConfig, TheoryCurveConfig, TuneConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, now_unix, Manifest, Table, TaskStatus};

/// Minimum fraction of replicates that must succeed for a run to count.
const MIN_SUCCESS: f64 = 0.9;

fn record(manifest: &mut Manifest, dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
    table.write(&dir.join(name))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

/// File-name friendly rendering of a parameter, e.g. `0.22` becomes `0p22`.
fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p").replace('-', "m")
}

pub fn theory_curve(config: &TheoryCurveConfig, out: &Path) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new("theory-curve", config, None, now_unix())?;
    if config.methods.is_empty() {
        return Err(CliError::Config("at `methods`: at least one method is required".into()));
    }
    let sigmas = config.sigma.values();
    if sigmas.is_empty() {
        return Err(CliError::Config("at `sigma`: at least one value is required".into()));
    }
    let opts = CurveOptions { clip_to_reachable: config.clip_to_reachable };
    for &sigma in &sigmas {
        for m in &config.methods {
            let model = ModelParams::new(config.delta, sigma, m.q)?;
            let curve = build_curve(m.method, &model, &config.prior, m.tuning, &config.atpp_grid, opts)?;
            let mut table = Table::new("method,q,lambda,s,atpp,afdp");
            for p in &curve.points {
                table.push(&[m.method.name().to_string(), fmt_f64(m.q), fmt_f64(p.lambda), fmt_f64(p.s), fmt_f64(p.atpp), fmt_f64(p.afdp)]);
            }
            let name = if sigmas.len() == 1 {
                format!("curve_{}_q{}.csv", m.method.name(), tag(m.q))
            } else {
                format!("curve_{}_q{}_sigma{}.csv", m.method.name(), tag(m.q), tag(sigma))
            };
            manifest.tasks.push(TaskStatus { name: name.clone(), ok: true, error: None });
            record(&mut manifest, out, &name, &table)?;
        }
    }
    Ok(manifest)
}

fn check_runs(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.replicates == 0 {
        return Err(CliError::Config("at `replicates`: must be at least 1".into()));
    }
    config.validate()?;
    Ok(())
}

/// Passes the manifest on, or writes it and fails when too few replicates succeeded.
fn finish(manifest: Manifest, out: &Path, failed: usize, total: usize) -> Result<Manifest, CliError> {
    if (total - failed) as f64 >= MIN_SUCCESS * total as f64 {
        Ok(manifest)
    } else {
        manifest.write(out)?;
        Err(CliError::Replicates { failed, total })
    }
}

pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    check_runs(config)?;
    let mut manifest = Manifest::new("simulate", config, Some(config.seed), now_unix())?;
    let report = run_experiment(config)?;
    let mut table = Table::new("method,q,atpp,mean_fdp,std_fdp,mean_mse");
    for r in &report.rows {
        table.push(&[r.method.name().to_string(), fmt_f64(r.q), fmt_f64(r.atpp), fmt_f64(r.mean_fdp), fmt_f64(r.std_fdp), fmt_f64(r.mean_mse)]);
    }
    record(&mut manifest, out, "report.csv", &table)?;
    manifest.tasks = report
        .replicates
        .iter()
        .map(|s| TaskStatus { name: format!("replicate {}", s.index), ok: s.ok, error: s.error.clone() })
        .collect();
    manifest.summary.insert("lambdas".into(), json!(report.lambdas));
    manifest.summary.insert("reached".into(), json!(report.rows.iter().map(|r| r.reached).collect::<Vec<_>>()));
    finish(manifest, out, report.failed(), report.replicates.len())
}

pub fn knockoff(config: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    check_runs(config)?;
    let mut manifest = Manifest::new("knockoff", config, Some(config.seed), now_unix())?;
    let report = run_knockoff(config)?;
    let mut table = Table::new("replicate,selected,fdp,tpp");
    for r in &report.replicates {
        table.push(&[r.index.to_string(), r.selected.to_string(), fmt_f64(r.fdp), fmt_f64(r.tpp)]);
    }
    record(&mut manifest, out, "knockoff.csv", &table)?;
    let mut tasks: Vec<TaskStatus> =
        report.replicates.iter().map(|r| TaskStatus { name: format!("replicate {}", r.index), ok: true, error: None }).collect();
    tasks.extend(report.failures.iter().map(|(i, e)| TaskStatus { name: format!("replicate {i}"), ok: false, error: Some(e.clone()) }));
    tasks.sort_by_key(|t| t.name.trim_start_matches("replicate ").parse::<u64>().unwrap_or(u64::MAX));
    manifest.tasks = tasks;
    manifest.summary.insert("q".into(), json!(report.q));
    manifest.summary.insert("lambda".into(), json!(report.lambda));
    manifest.summary.insert("fdr_target".into(), json!(report.fdr_target));
    manifest.summary.insert("mean_fdp".into(), json!(report.mean_fdp()));
    manifest.summary.insert("mean_tpp".into(), json!(report.mean_tpp()));
    finish(manifest, out, report.failures.len(), config.replicates)
}

pub fn tune(config: &TuneConfig, out: &Path) -> Result<(Manifest, Table), CliError> {
    let mut manifest = Manifest::new("tune", config, None, now_unix())?;
    let mut table = Table::new("q,alpha,tau,lambda,amse");
    for q in config.q.values() {
        let se = optimal_tuning(&ModelParams::new(config.delta, config.sigma, q)?, &config.prior)?;
        table.push(&[fmt_f64(q), fmt_f64(se.alpha), fmt_f64(se.tau), fmt_f64(se.lambda), fmt_f64(se.amse)]);
    }
    record(&mut manifest, out, "tune.csv", &table)?;
    Ok((manifest, table))
}

pub fn lambda_map(config: &LambdaMapConfig, out: &Path) -> Result<(Manifest, Table), CliError> {
    let mut manifest = Manifest::new("lambda-map", config, None, now_unix())?;
    let model = ModelParams::new(config.delta, config.sigma, config.q)?;
    let mut table = Table::new("lambda,alpha,tau,amse");
    for &lambda in &config.lambdas {
        let se = solve_given_lambda(lambda, &model, &config.prior)?;
        table.push(&[fmt_f64(lambda), fmt_f64(se.alpha), fmt_f64(se.tau), fmt_f64(se.amse)]);
    }
    record(&mut manifest, out, "lambda_map.csv", &table)?;
    Ok((manifest, table))
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Config(format!("at `{key}`: required for this regime")))
}

fn expansion(config: &AsymptoteConfig, q: f64) -> Result<ExpansionResult, CliError> {
    let prior = || need::<SignalPrior>(&config.prior, "prior");
    let sigma = || need(&config.sigma, "sigma");
    let model = || -> Result<ModelParams, CliError> { Ok(ModelParams::new(need(&config.delta, "delta")?, sigma()?, q)?) };
    Ok(match config.regime {
        AsymptoteRegime::LargeNoise => amse_large_noise(q, &prior()?, sigma()?)?,
        AsymptoteRegime::LowNoise => amse_low_noise(&model()?, &prior()?)?,
        AsymptoteRegime::LargeSample => amse_large_sample(&model()?, &prior()?)?,
        AsymptoteRegime::ExtremeSparse => amse_extreme_sparse(q, &prior()?, sigma()?)?,
        AsymptoteRegime::NearlyBlack => nearly_black_rate(q, need(&config.case, "case")?, &prior()?, sigma()?, config.delta)?,
        AsymptoteRegime::CQ => unreachable!("handled by the caller"),
    })
}

pub fn asymptote(config: &AsymptoteConfig, out: &Path) -> Result<(Manifest, Table), CliError> {
    let mut manifest = Manifest::new("asymptote", config, None, now_unix())?;
    let mut table = Table::new("q,regime,leading,second");
    for q in config.q_values()? {
        let (regime, leading, second) = if config.regime == AsymptoteRegime::CQ {
            ("c_q".to_string(), cq(q)?, 0.0)
        } else {
            let e = expansion(config, q)?;
            (e.regime.tag(), e.leading, e.second_order)
        };
        table.push(&[fmt_f64(q), regime, fmt_f64(leading), fmt_f64(second)]);
    }
    record(&mut manifest, out, "asymptote.csv", &table)?;
    Ok((manifest, table))
}
