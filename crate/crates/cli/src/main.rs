//! `bridgelab` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "bridgelab", version, about = "Bridge regression theory, tuning and Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for Monte Carlo replicates.
    #[arg(long, env = "BRIDGELAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct Seeded {
    #[command(flatten)]
    common: Common,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic TPP/FDP trade-off curves.
    TheoryCurve(Common),
    /// Monte Carlo TPP/FDP report.
    Simulate(Seeded),
    /// Optimal tuning for each exponent.
    Tune(Common),
    /// State evolution at fixed penalty levels.
    LambdaMap(Common),
    /// Closed-form asymptotic expansions.
    Asymptote(Common),
    /// Knockoff filter on simulated data.
    Knockoff(Seeded),
}

fn prepare(common: &Common) -> Result<(), CliError> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("at `--threads`: must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::fs::create_dir_all(&common.out)?;
    Ok(())
}

fn experiment(args: &Seeded) -> Result<bridgelab::pipeline::ExperimentConfig, CliError> {
    let mut cfg: config::SimulateConfig = config::load(&args.common.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn print_table(table: &output::Table) {
    print!("{}", table.render());
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let (manifest, out): (output::Manifest, &Path) = match &cli.command {
        Command::TheoryCurve(c) => {
            prepare(c)?;
            (commands::theory_curve(&config::load(&c.config)?, &c.out)?, &c.out)
        }
        Command::Simulate(s) => {
            prepare(&s.common)?;
            (commands::simulate(&experiment(s)?, &s.common.out)?, &s.common.out)
        }
        Command::Knockoff(s) => {
            prepare(&s.common)?;
            (commands::knockoff(&experiment(s)?, &s.common.out)?, &s.common.out)
        }
        Command::Tune(c) => {
            prepare(c)?;
            let (m, t) = commands::tune(&config::load(&c.config)?, &c.out)?;
            print_table(&t);
            (m, &c.out)
        }
        Command::LambdaMap(c) => {
            prepare(c)?;
            let (m, t) = commands::lambda_map(&config::load(&c.config)?, &c.out)?;
            print_table(&t);
            (m, &c.out)
        }
        Command::Asymptote(c) => {
            prepare(c)?;
            let (m, t) = commands::asymptote(&config::load(&c.config)?, &c.out)?;
            print_table(&t);
            (m, &c.out)
        }
    };
    manifest.write(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(path) => {
            eprintln!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bridgelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
