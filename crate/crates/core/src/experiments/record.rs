use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::train::TrainFailure;

/// One finished (or failed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub method: String,
    /// Hash of the single-run configuration (sweep values substituted).
    pub config_hash: String,
    pub seed: u64,
    /// Swept coordinates of this run, e.g. `epsilon`, `d_u`, `layers`, `t`.
    pub params: BTreeMap<String, f64>,
    /// Mean minibatch loss per epoch.
    pub losses: Vec<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub failure: Option<TrainFailure>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
}
