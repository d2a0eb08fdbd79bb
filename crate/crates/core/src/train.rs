//! Minibatch Adam training of a ratio model.

use std::fmt;
use std::str::FromStr;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::nn::AdamState;
use crate::objectives::{gamma_at_epoch, objective_loss, GammaConfig, NegativePairing, Objective, PairingMode};
use crate::ratio::RatioModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lr,
    Gamma,
    Dv,
    Fdiv,
    Infonce,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lr, Method::Gamma, Method::Dv, Method::Fdiv, Method::Infonce];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Gamma => "gamma",
            Method::Dv => "dv",
            Method::Fdiv => "fdiv",
            Method::Infonce => "infonce",
        }
    }

    /// The objective in force; γ = 0 routes to the logistic loss.
    pub fn objective(&self, gamma: f64) -> Objective {
        match self {
            Method::Lr => Objective::Lr,
            Method::Gamma if gamma == 0.0 => Objective::Lr,
            Method::Gamma => Objective::Gamma(gamma),
            Method::Dv => Objective::Dv,
            Method::Fdiv => Objective::Fdiv,
            Method::Infonce => Objective::InfoNce,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("method: unknown method `{s}` (expected lr, gamma, dv, fdiv or infonce)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub pairing: PairingMode,
    pub gamma: GammaConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            batch_size: 256,
            learning_rate: 1e-3,
            l2: 1e-4,
            pairing: PairingMode::Permutation,
            gamma: GammaConfig::constant(1.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainFailure {
    pub epoch: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean minibatch loss per completed epoch.
    pub losses: Vec<f64>,
    pub failure: Option<TrainFailure>,
}

impl TrainReport {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Trains in place. A non-finite loss or gradient stops the run and is reported
/// in [`TrainReport::failure`] with the epoch index rather than as an error.
pub fn train(model: &mut RatioModel, data: &PairedBatch, method: Method, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.batch_size < 2 {
        return Err(Error::Config(format!("batch_size must be at least 2, got {}", cfg.batch_size)));
    }
    if data.len() < 2 {
        return Err(Error::Config("training needs at least 2 pairs".into()));
    }
    cfg.gamma.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.learning_rate, cfg.l2);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let obj = method.objective(gamma_at_epoch(&cfg.gamma, epoch)?);
        order.shuffle(&mut rng);
        let (mut total, mut batches) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size).filter(|c| c.len() >= 2) {
            let x = data.x.select_rows(chunk);
            let u = data.u.select_rows(chunk);
            let pairing = NegativePairing::draw(cfg.pairing, chunk.len(), &mut rng);
            let loss = objective_loss(model, &x, &u, &pairing, obj)?;
            if !loss.is_finite() {
                return Ok(fail(losses, epoch, format!("non-finite loss {loss}")));
            }
            match adam.adam_step(model) {
                Ok(()) => {}
                Err(e @ Error::NonFinite { .. }) => return Ok(fail(losses, epoch, e.to_string())),
                Err(e) => return Err(e),
            }
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        debug!("epoch {epoch} {} loss {mean:.6}", obj.name());
        losses.push(mean);
    }
    Ok(TrainReport { losses, failure: None })
}

fn fail(losses: Vec<f64>, epoch: usize, message: String) -> TrainReport {
    log::warn!("training failed at epoch {epoch}: {message}");
    TrainReport { losses, failure: Some(TrainFailure { epoch, message }) }
}
