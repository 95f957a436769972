use super::config::{DesignKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::solver::RegressionProblem;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

/// Independent random streams drawn for each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Design = 1,
    Signal = 2,
    Noise = 3,
    Knockoff = 4,
}

/// Generator for `(seed, replicate, purpose)`. Streams never overlap, so
/// replicates can be drawn in any order.
pub fn stream(seed: u64, replicate: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 8) | purpose as u64);
    rng
}

/// Draws regression instances for one configuration.
///
/// The Toeplitz factor is computed once here and shared by all replicates.
#[derive(Debug, Clone)]
pub struct DataGenerator {
    config: ExperimentConfig,
    /// Upper factor `R` with `RᵀR = Σ`; the observed design is `XR`.
    corr_factor: Option<DMatrix<f64>>,
}

impl DataGenerator {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let corr_factor = match config.design.kind {
            DesignKind::ToeplitzCorrelated => {
                let rho = config.design.corr_rho.unwrap_or(0.0);
                let p = config.p;
                let sigma = DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
                let chol = sigma
                    .cholesky()
                    .ok_or_else(|| Error::Design(format!("Toeplitz matrix with rho = {rho} is not positive definite")))?;
                Some(chol.l().transpose())
            }
            _ => None,
        };
        Ok(Self { config: config.clone(), corr_factor })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Design, response and true coefficients of replicate `index`.
    pub fn generate(&self, index: u64) -> Result<(RegressionProblem, DVector<f64>)> {
        let c = &self.config;
        let (n, p) = (c.n(), c.p);
        let mut rng = stream(c.seed, index, Purpose::Design);
        let x = match c.design.kind {
            DesignKind::StudentT => {
                let nu = c.design.t_nu.unwrap_or(f64::INFINITY);
                let t = StudentT::new(nu).map_err(|e| Error::Design(e.to_string()))?;
                let scale = ((nu - 2.0) / (n as f64 * nu)).sqrt();
                DMatrix::from_fn(n, p, |_, _| scale * t.sample(&mut rng))
            }
            _ => {
                let scale = 1.0 / (n as f64).sqrt();
                DMatrix::from_fn(n, p, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
            }
        };
        let x = match &self.corr_factor {
            Some(r) => x * r,
            None => x,
        };
        let mut rng = stream(c.seed, index, Purpose::Signal);
        let atoms = c.prior.atoms();
        let beta = DVector::from_fn(p, |_, _| {
            if rng.random::<f64>() >= c.prior.epsilon {
                return 0.0;
            }
            let mut u = rng.random::<f64>();
            for (g, w) in &atoms {
                if u < *w {
                    return *g;
                }
                u -= w;
            }
            atoms.last().map_or(0.0, |a| a.0)
        });
        let mut rng = stream(c.seed, index, Purpose::Noise);
        let sd = c.noise_sd();
        let noise = DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
        let y = &x * &beta + noise;
        Ok((RegressionProblem::new(x, y)?, beta))
    }
}

/// One-off convenience around [`DataGenerator`].
pub fn generate_data(config: &ExperimentConfig, replicate: u64) -> Result<(RegressionProblem, DVector<f64>)> {
    DataGenerator::new(config)?.generate(replicate)
}
