//! TOML schemas of the subcommands.

use bridgelab::asymptotics::NearlyBlackCase;
use bridgelab::pipeline::ExperimentConfig;
use bridgelab::{Method, SignalPrior, Tuning};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::CliError;

/// Reads and validates a TOML file, reporting the failing field path.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner().message()))
    })
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveMethod {
    pub method: Method,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "optimal")]
    pub tuning: Tuning,
}

fn one() -> f64 {
    1.0
}

fn optimal() -> Tuning {
    Tuning::Optimal
}

fn yes() -> bool {
    true
}

fn default_curve_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryCurveConfig {
    pub delta: f64,
    pub sigma: OneOrMany,
    pub prior: SignalPrior,
    pub methods: Vec<CurveMethod>,
    #[serde(default = "default_curve_grid")]
    pub atpp_grid: Vec<f64>,
    #[serde(default = "yes")]
    pub clip_to_reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub delta: f64,
    pub sigma: f64,
    pub q: OneOrMany,
    pub prior: SignalPrior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaMapConfig {
    pub delta: f64,
    pub sigma: f64,
    pub q: f64,
    pub prior: SignalPrior,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoteRegime {
    LargeNoise,
    LowNoise,
    LargeSample,
    ExtremeSparse,
    NearlyBlack,
    /// The large-noise constant `c_q` alone.
    CQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoteConfig {
    pub regime: AsymptoteRegime,
    /// Explicit exponents.
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// `[start, stop, step]`, inclusive of `stop` up to rounding.
    #[serde(default)]
    pub q_range: Option<[f64; 3]>,
    #[serde(default)]
    pub prior: Option<SignalPrior>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Growth case for the nearly black regime.
    #[serde(default)]
    pub case: Option<NearlyBlackCase>,
}

impl AsymptoteConfig {
    pub fn q_values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.q, &self.q_range) {
            (Some(q), None) => Ok(q.clone()),
            (None, Some([start, stop, step])) => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::Config("at `q_range`: need step > 0 and stop >= start".into()));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|k| start + k as f64 * step).collect())
            }
            _ => Err(CliError::Config("exactly one of `q` and `q_range` must be given".into())),
        }
    }
}

/// Both `simulate` and `knockoff` read the experiment schema directly.
pub type SimulateConfig = ExperimentConfig;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_name_their_path() {
        let text = "delta = 1.0\nsigma = 0.5\nq = 2.0\n[prior]\nepsilon = 0.2\nbogus = 1\n[prior.nonzero]\nkind = \"point_mass\"\nm = 1.0\n";
        let err = parse::<TuneConfig>(text).unwrap_err().to_string();
        assert!(err.contains("prior") && err.contains("bogus"), "{err}");
    }

    #[test]
    fn q_range_expands_inclusively() {
        let c: AsymptoteConfig = parse("regime = \"c_q\"\nq_range = [1.1, 4.0, 0.1]\n").unwrap();
        let q = c.q_values().unwrap();
        assert_eq!(q.len(), 30);
        assert!((q[29] - 4.0).abs() < 1e-12);
    }
}
