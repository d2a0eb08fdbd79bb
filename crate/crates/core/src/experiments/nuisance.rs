use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Scenario};
use super::ica::record;
use super::record::RunRecord;
use super::{derive_seed, train_config};
use crate::error::{Error, Result};
use crate::metrics::{mean_abs_correlation, nuisance_independence_score, robust_whiten};
use crate::nn::{Activation, DenseLayer, FeedforwardNet, Layer};
use crate::ratio::{ElementwisePsi, Head, Psi, RatioModel};
use crate::train::train;

/// `x = f([s; n])` with `s` (dimension `cfg.d_s`) driven by `u` and `n` pure
/// nuisance. Fits a `d_s`-dimensional `h_x` and measures how much of `s` and of
/// `n` the features carry on held-out rows.
pub fn run_nuisance(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    if cfg.scenario()? != Scenario::Nuisance {
        return Err(Error::Config(format!("scenario: run_nuisance needs nuisance, got {}", cfg.scenario)));
    }
    cfg.validate()?;
    let method = cfg.method()?;
    let start = Instant::now();
    let all = crate::synth::gen_nuisance_scenario(cfg.d_s, cfg.d_x, cfg.d_u, cfg.t + cfg.t_test, cfg.layers, derive_seed(seed, 1))?;
    let train_idx: Vec<usize> = (0..cfg.t).collect();
    let test_idx: Vec<usize> = (cfg.t..cfg.t + cfg.t_test).collect();
    let mut data = all.select(&train_idx).clone_without_truth();
    let (whitening, xw) = robust_whiten(&data.x, cfg.whitening_gamma())?;
    data.x = xw;
    let test = all.select(&test_idx);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
    let h_x = FeedforwardNet::maxout_mlp(cfg.d_x, 4 * cfg.d_x, cfg.layers.max(1), cfg.d_s, 2, &mut rng)?;
    let h_u = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::glorot(cfg.d_u, cfg.d_s, Activation::None, &mut rng)?)])?;
    let mut model = RatioModel::new_wide_u(h_x, h_u, Psi::LogCosh(ElementwisePsi::new(cfg.d_s)), Head::Zero, Head::Zero)?;
    let report = train(&mut model, &data, method, &train_config(cfg, seed))?;

    let mut metrics = BTreeMap::new();
    if !report.failed() {
        let features = model.represent(&whitening.apply(&test.x)?)?;
        let (s, n) = (test.s.as_ref().expect("generator sets s"), test.n.as_ref().expect("generator sets n"));
        let (dep_s, dep_n) = nuisance_independence_score(&features, s, n)?;
        metrics.insert("dep_s".into(), dep_s);
        metrics.insert("dep_n".into(), dep_n);
        metrics.insert("mean_abs_corr".into(), mean_abs_correlation(&features, s)?.mean_abs_corr);
    }
    let mut rec = record(cfg, method, seed, report.losses, metrics, start, report.failure);
    rec.params.insert("d_s".into(), cfg.d_s as f64);
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_run_reports_dependence() {
        let cfg = ExperimentConfig {
            scenario: "nuisance".into(),
            d_x: 4,
            d_s: 2,
            d_u: 3,
            t: 600,
            t_test: 300,
            epochs: 2,
            batch_size: 100,
            ..ExperimentConfig::default()
        };
        let r = run_nuisance(&cfg, 0).unwrap();
        for k in ["dep_s", "dep_n", "mean_abs_corr"] {
            let v = r.metric(k).unwrap();
            assert!((0.0..=1.0).contains(&v), "{k}={v}");
        }
    }

    #[test]
    fn needs_nuisance_dimensions() {
        let cfg = ExperimentConfig { scenario: "nuisance".into(), d_x: 2, d_s: 2, ..ExperimentConfig::default() };
        assert!(run_nuisance(&cfg, 0).unwrap_err().to_string().contains("d_s"));
    }
}
