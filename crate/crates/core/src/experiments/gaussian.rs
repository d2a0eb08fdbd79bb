use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ExperimentConfig, Scenario};
use super::ica::record;
use super::record::RunRecord;
use super::{derive_seed, train_config};
use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::metrics::{gaussian_mi, ratio_rmse, Grid};
use crate::nn::FeedforwardNet;
use crate::objectives::{objective_value, NegativePairing, Objective};
use crate::ratio::{Head, Psi, RatioModel};
use crate::tensor::Tensor;
use crate::train::train;

/// Correlation of the scalar pair.
pub const PAIR_RHO: f64 = 0.8;

/// `t` draws of a standard bivariate normal with correlation `rho`.
pub fn gaussian_pairs(rho: f64, t: usize, seed: u64) -> Result<PairedBatch> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (1.0 - rho * rho).sqrt();
    let (mut x, mut u) = (Vec::with_capacity(t), Vec::with_capacity(t));
    for _ in 0..t {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        x.push(a);
        u.push(rho * a + c * b);
    }
    PairedBatch::new(Tensor::matrix(t, 1, x)?, Tensor::matrix(t, 1, u)?)
}

/// `x w u + quadratic heads`: contains the exact Gaussian log-ratio.
pub fn matched_gaussian_model() -> Result<RatioModel> {
    RatioModel::new(
        FeedforwardNet::identity(1),
        Some(FeedforwardNet::identity(1)),
        Psi::bilinear_zero(1, 1),
        Head::quadratic(1),
        Head::quadratic(1),
    )
}

/// Fits the matched model and reports the constant-adjusted RMSE on `[−2,2]²`
/// and the held-out mutual-information estimate `−Ĵ_DV` (all cross pairs as negatives).
pub fn run_gaussian_ratio(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    if cfg.scenario()? != Scenario::GaussianRatio {
        return Err(Error::Config(format!("scenario: run_gaussian_ratio needs gaussian_ratio, got {}", cfg.scenario)));
    }
    cfg.validate()?;
    let method = cfg.method()?;
    let start = Instant::now();
    let data = gaussian_pairs(PAIR_RHO, cfg.t, derive_seed(seed, 1))?;
    let test = gaussian_pairs(PAIR_RHO, cfg.t_test.min(2000), derive_seed(seed, 3))?;
    let mut model = matched_gaussian_model()?;
    let report = train(&mut model, &data, method, &train_config(cfg, seed))?;
    let mut metrics = BTreeMap::new();
    if !report.failed() {
        metrics.insert("ratio_rmse".into(), ratio_rmse(&model, PAIR_RHO, &Grid::square(-2.0, 2.0, 41))?);
        let dv = objective_value(&model, &test.x, &test.u, &NegativePairing::FullCross, Objective::Dv)?;
        metrics.insert("mi_estimate".into(), -dv);
        metrics.insert("mi_true".into(), gaussian_mi(PAIR_RHO));
    }
    Ok(record(cfg, method, seed, report.losses, metrics, start, report.failure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pearson;

    #[test]
    fn pairs_have_the_requested_correlation() {
        let b = gaussian_pairs(0.8, 50_000, 1).unwrap();
        assert!((pearson(b.x.data(), b.u.data()) - 0.8).abs() < 0.01);
        assert!(gaussian_pairs(1.0, 10, 1).is_err());
    }

    #[test]
    fn short_run_reports_metrics() {
        let cfg = ExperimentConfig { scenario: "gaussian_ratio".into(), t: 500, t_test: 200, epochs: 2, ..ExperimentConfig::default() };
        let r = run_gaussian_ratio(&cfg, 0).unwrap();
        assert!(r.metric("ratio_rmse").unwrap().is_finite());
        assert!(r.metric("mi_estimate").unwrap().is_finite());
    }
}
