//! Seeded, configuration-driven experiment runners and their outputs.

mod config;
mod dimsweep;
mod downstream;
mod gaussian;
mod ica;
mod nuisance;
pub mod plotdata;
mod record;
mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, Scenario, ENV_OUTPUT_DIR, ENV_THREADS};
pub use dimsweep::{dimsweep_data, dimsweep_model, run_dimsweep_point};
pub use downstream::{class_pairs, encoder_model, run_downstream, CLASSES, CLASS_DIM, REP_DIM};
pub use gaussian::{gaussian_pairs, matched_gaussian_model, run_gaussian_ratio, PAIR_RHO};
pub use ica::{fit_and_score, fit_ica, ica_data, ica_model, run_ica, IcaData};
pub use nuisance::run_nuisance;
pub use plotdata::{aggregate, default_axes, emit_plotdata, load_records, AggregateRow, PlotFiles};
pub use record::RunRecord;
pub use sweep::{expand, run_sweep};
pub use verify::{run_verify, CheckResult, VerifyReport};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objectives::PairingMode;
use crate::train::TrainConfig;

/// Independent sub-seed `tag` of a run seed (data, mixing, init, shuffles, ...).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r.next_u64()
}

pub(crate) fn train_config(cfg: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        l2: cfg.l2,
        pairing: PairingMode::Permutation,
        gamma: cfg.gamma(),
        seed: derive_seed(seed, 5),
    }
}

/// Runs one seed of a training scenario as configured (no sweeping).
pub fn run_one(cfg: &ExperimentConfig, seed: u64) -> crate::error::Result<RunRecord> {
    match cfg.scenario()? {
        Scenario::IcaPcl | Scenario::IcaRobustness => run_ica(cfg, seed),
        Scenario::IcaDimsweep => run_dimsweep_point(cfg, seed),
        Scenario::GaussianRatio => run_gaussian_ratio(cfg, seed),
        Scenario::Nuisance => run_nuisance(cfg, seed),
        Scenario::Downstream => run_downstream(cfg, seed),
        Scenario::VerifyTheory => Err(crate::error::Error::Config("scenario: verify_theory has no training run; use run_verify".into())),
    }
}
