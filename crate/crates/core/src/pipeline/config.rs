use crate::error::{Error, Result};
use crate::prior::SignalPrior;
use crate::selection::Method;
use crate::state_evolution::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    #[default]
    IidGaussian,
    ToeplitzCorrelated,
    StudentT,
}

/// Design family. `corr_rho` is required for the Toeplitz design and `t_nu`
/// for the Student-t design; neither may appear otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub kind: DesignKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_nu: Option<f64>,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        let need = |name: &str, v: Option<f64>, wanted: bool| -> Result<()> {
            match (v.is_some(), wanted) {
                (true, false) => Err(Error::Config(format!("design.{name} is only allowed for its own design kind"))),
                (false, true) => Err(Error::Config(format!("design.{name} is required for this design kind"))),
                _ => Ok(()),
            }
        };
        need("corr_rho", self.corr_rho, self.kind == DesignKind::ToeplitzCorrelated)?;
        need("t_nu", self.t_nu, self.kind == DesignKind::StudentT)?;
        if let Some(rho) = self.corr_rho {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(Error::Config(format!("design.corr_rho must be nonnegative, got {rho}")));
            }
        }
        if let Some(nu) = self.t_nu {
            if !(nu > 2.0) || !nu.is_finite() {
                return Err(Error::Config(format!("design.t_nu must exceed 2, got {nu}")));
            }
        }
        Ok(())
    }
}

/// Noise variance `σ²`, or `σ²/δ` for the large-sample model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaling {
    #[default]
    Plain,
    LargeSample,
}

/// How a simulated method picks its penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningSpec {
    /// The state-evolution optimum `λ*`.
    Optimal,
    /// Minimize `τ̂²` on each replicate.
    Estimated,
    Lambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "optimal")]
    pub tuning: TuningSpec,
}

fn one() -> f64 {
    1.0
}

fn optimal() -> TuningSpec {
    TuningSpec::Optimal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    /// `n = round(δ p)`.
    pub delta: f64,
    pub prior: SignalPrior,
    pub sigma: f64,
    #[serde(default)]
    pub noise_scaling: NoiseScaling,
    #[serde(default)]
    pub design: DesignSpec,
    pub methods: Vec<MethodSpec>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub atpp_grid: Vec<f64>,
    /// Target level of the knockoff filter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr_target: Option<f64>,
}

fn default_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

impl ExperimentConfig {
    pub fn n(&self) -> usize {
        (self.delta * self.p as f64).round() as usize
    }

    /// Noise standard deviation actually added to the response.
    pub fn noise_sd(&self) -> f64 {
        match self.noise_scaling {
            NoiseScaling::Plain => self.sigma,
            NoiseScaling::LargeSample => self.sigma / self.delta.sqrt(),
        }
    }

    /// State-evolution model matching this experiment for exponent `q`.
    pub fn model(&self, q: f64) -> Result<ModelParams> {
        ModelParams::new(self.delta, self.noise_sd(), q)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.p < 10 {
            return cfg(format!("p must be at least 10, got {}", self.p));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() || self.n() == 0 {
            return cfg(format!("delta must give at least one observation, got {}", self.delta));
        }
        if self.replicates == 0 {
            return cfg("replicates must be at least 1".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return cfg(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        self.prior.validate().map_err(|e| Error::Config(format!("prior: {e}")))?;
        self.design.validate()?;
        for (i, m) in self.methods.iter().enumerate() {
            if !(m.q >= 1.0) || !m.q.is_finite() {
                return cfg(format!("methods[{i}].q must be >= 1, got {}", m.q));
            }
            if m.method == Method::Lasso && m.q != 1.0 {
                return cfg(format!("methods[{i}]: lasso requires q = 1"));
            }
            if let TuningSpec::Lambda(l) = m.tuning {
                if !(l > 0.0) || !l.is_finite() {
                    return cfg(format!("methods[{i}].tuning.lambda must be positive, got {l}"));
                }
            }
        }
        if let Some(bad) = self.atpp_grid.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return cfg(format!("atpp_grid values must lie in [0, 1], got {bad}"));
        }
        if let Some(t) = self.fdr_target {
            if !(t > 0.0 && t < 1.0) {
                return cfg(format!("fdr_target must lie in (0, 1), got {t}"));
            }
        }
        Ok(())
    }
}
