use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant γ over epochs. A value of 0 selects the logistic objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    /// `(epoch_threshold, gamma)` pairs with nondecreasing thresholds.
    pub schedule: Vec<(usize, f64)>,
}

impl GammaConfig {
    pub fn constant(gamma: f64) -> Self {
        Self { schedule: vec![(0, gamma)] }
    }

    /// `from` at epoch 0, then evenly spaced steps every `every` epochs until `to`.
    pub fn ramp(from: f64, to: f64, steps: usize, every: usize) -> Self {
        let steps = steps.max(1);
        let schedule = (0..=steps)
            .map(|i| (i * every, from + (to - from) * i as f64 / steps as f64))
            .collect();
        Self { schedule }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::Config("gamma schedule is empty".into()));
        }
        if self.schedule.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Config("gamma schedule thresholds must be nondecreasing".into()));
        }
        if let Some(&(_, g)) = self.schedule.iter().find(|(_, g)| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::Config(format!("gamma schedule values must be finite and >= 0, got {g}")));
        }
        Ok(())
    }
}

/// Value in force at `epoch`: the last entry whose threshold is ≤ epoch, or the
/// first entry before any threshold is reached.
pub fn gamma_at_epoch(config: &GammaConfig, epoch: usize) -> Result<f64> {
    config.validate()?;
    let s = &config.schedule;
    Ok(s.iter().rev().find(|(t, _)| *t <= epoch).unwrap_or(&s[0]).1)
}
