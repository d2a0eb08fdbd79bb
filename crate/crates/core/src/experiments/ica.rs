use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Scenario};
use super::record::RunRecord;
use super::{derive_seed, train_config};
use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::metrics::{mean_abs_correlation, robust_whiten, WhiteningTransform};
use crate::nn::FeedforwardNet;
use crate::ratio::{ElementwisePsi, Head, Psi, RatioModel};
use crate::synth::{make_lagged_pairs, ArLaplace, ContaminationSpec, MixingNet, DEFAULT_MAX_CONDITION};
use crate::tensor::Tensor;
use crate::train::{train, Method};

/// Training pairs plus clean held-out observations for scoring.
#[derive(Debug, Clone)]
pub struct IcaData {
    /// Whitened `(x(t), x(t−1))`; `s` holds the true sources for inspection only.
    pub train: PairedBatch,
    pub test_x: Tensor,
    pub test_s: Tensor,
    pub whitening: WhiteningTransform,
}

/// Contaminated AR-Laplace sources, random mixing, lagged pairs, robust whitening.
/// The held-out set is clean, mixed by the same network and whitened by the
/// training transform.
pub fn ica_data(cfg: &ExperimentConfig, seed: u64) -> Result<IcaData> {
    let gen = ArLaplace::new(cfg.source_rho, cfg.d_x)?;
    let spec = ContaminationSpec::timeseries(cfg.epsilon, cfg.source_rho)?;
    let (s, flags) = gen.generate_contaminated(cfg.t + 1, &spec, derive_seed(seed, 1))?;
    let mixer = MixingNet::random(cfg.d_x, cfg.layers, DEFAULT_MAX_CONDITION, derive_seed(seed, 2))?;
    let (whitening, xw) = robust_whiten(&mixer.mix(&s)?, cfg.whitening_gamma())?;
    let train = make_lagged_pairs(&xw, Some(&s), Some(&flags))?;
    let test_s = gen.generate(cfg.t_test, derive_seed(seed, 3))?;
    let test_x = whitening.apply(&mixer.mix(&test_s)?)?;
    Ok(IcaData { train, test_x, test_s, whitening })
}

/// Shared maxout feature net with as many layers as the mixing (hidden width
/// `4·D_x`, two pieces per unit) and the absolute-value ψ.
pub fn ica_model(d_x: usize, layers: usize, seed: u64) -> Result<RatioModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
    let h = FeedforwardNet::maxout_mlp(d_x, 4 * d_x, layers.saturating_sub(1), d_x, 2, &mut rng)?;
    RatioModel::new(h, None, Psi::PclAbs(ElementwisePsi::new(d_x)), Head::Zero, Head::Zero)
}

/// Trains the ICA model on `data` and scores it against the held-out sources.
pub fn fit_ica(cfg: &ExperimentConfig, data: &IcaData, seed: u64) -> Result<RunRecord> {
    fit_and_score(cfg, data, ica_model(cfg.d_x, cfg.layers, seed)?, seed)
}

/// Trains `model` on the observed pairs only and reports `mean_abs_corr` of
/// `h_x` on the held-out set.
pub fn fit_and_score(cfg: &ExperimentConfig, data: &IcaData, mut model: RatioModel, seed: u64) -> Result<RunRecord> {
    let method = cfg.method()?;
    let start = Instant::now();
    let report = train(&mut model, &data.train.clone_without_truth(), method, &train_config(cfg, seed))?;
    let mut metrics = BTreeMap::new();
    if !report.failed() {
        let corr = mean_abs_correlation(&model.represent(&data.test_x)?, &data.test_s)?;
        metrics.insert("mean_abs_corr".into(), corr.mean_abs_corr);
    }
    Ok(record(cfg, method, seed, report.losses, metrics, start, report.failure))
}

pub(crate) fn record(
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
    losses: Vec<f64>,
    metrics: BTreeMap<String, f64>,
    start: Instant,
    failure: Option<crate::train::TrainFailure>,
) -> RunRecord {
    let params = BTreeMap::from([
        ("epsilon".to_string(), cfg.epsilon),
        ("d_x".to_string(), cfg.d_x as f64),
        ("d_u".to_string(), cfg.d_u as f64),
        ("layers".to_string(), cfg.layers as f64),
        ("t".to_string(), cfg.t as f64),
    ]);
    RunRecord {
        scenario: cfg.scenario.clone(),
        method: method.name().into(),
        config_hash: cfg.hash(),
        seed,
        params,
        losses,
        metrics,
        wall_time_s: start.elapsed().as_secs_f64(),
        failure,
    }
}

/// One nonlinear-ICA run (time-contrastive pairs, pcl_abs model).
pub fn run_ica(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    match cfg.scenario()? {
        Scenario::IcaPcl | Scenario::IcaRobustness => {}
        other => return Err(Error::Config(format!("scenario: run_ica needs ica_pcl or ica_robustness, got {}", other.name()))),
    }
    cfg.validate()?;
    fit_ica(cfg, &ica_data(cfg, seed)?, seed)
}
