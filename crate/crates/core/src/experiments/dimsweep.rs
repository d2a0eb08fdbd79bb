use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Scenario};
use super::ica::{fit_and_score, IcaData};
use super::record::RunRecord;
use super::derive_seed;
use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::metrics::robust_whiten;
use crate::nn::{Activation, DenseLayer, FeedforwardNet, Layer};
use crate::ratio::{ElementwisePsi, Head, Psi, RatioModel};
use crate::synth::{contaminate_pairs, gen_logcosh_sources, random_source_weights, ContaminationSpec, MixingNet, DEFAULT_MAX_CONDITION, DEFAULT_OUTLIER_OFFSET};

/// Sources with log-cosh conditionals given uniform `u` of dimension `cfg.d_u`,
/// mixed and whitened; the held-out set shares the weights and the mixing.
pub fn dimsweep_data(cfg: &ExperimentConfig, seed: u64) -> Result<IcaData> {
    let w = random_source_weights(cfg.d_x, cfg.d_u, derive_seed(seed, 6));
    let (s, u) = gen_logcosh_sources(&w, cfg.t, derive_seed(seed, 1))?;
    let mixer = MixingNet::random(cfg.d_x, cfg.layers, DEFAULT_MAX_CONDITION, derive_seed(seed, 2))?;
    let mut batch = PairedBatch::new(mixer.mix(&s)?, u)?.with_sources(s)?;
    if cfg.epsilon > 0.0 {
        let spec = ContaminationSpec::gaussian(cfg.epsilon, cfg.contamination_model, DEFAULT_OUTLIER_OFFSET)?;
        batch = contaminate_pairs(&batch, &spec, derive_seed(seed, 7))?;
    }
    let (whitening, xw) = robust_whiten(&batch.x, cfg.whitening_gamma())?;
    batch.x = xw;
    let (test_s, _) = gen_logcosh_sources(&w, cfg.t_test, derive_seed(seed, 3))?;
    let test_x = whitening.apply(&mixer.mix(&test_s)?)?;
    Ok(IcaData { train: batch, test_x, test_s, whitening })
}

/// Maxout `h_x`, affine `h_u: R^{D_u} → R^{D_x}` and the log-cosh ψ.
pub fn dimsweep_model(d_x: usize, d_u: usize, layers: usize, seed: u64) -> Result<RatioModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
    let h_x = FeedforwardNet::maxout_mlp(d_x, 4 * d_x, layers.saturating_sub(1), d_x, 2, &mut rng)?;
    let h_u = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::glorot(d_u, d_x, Activation::None, &mut rng)?)])?;
    RatioModel::new_wide_u(h_x, h_u, Psi::LogCosh(ElementwisePsi::new(d_x)), Head::Zero, Head::Zero)
}

/// One run at `cfg.d_u`; sweeps substitute each grid value.
pub fn run_dimsweep_point(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    if cfg.scenario()? != Scenario::IcaDimsweep {
        return Err(Error::Config(format!("scenario: run_dimsweep needs ica_dimsweep, got {}", cfg.scenario)));
    }
    cfg.validate()?;
    let data = dimsweep_data(cfg, seed)?;
    fit_and_score(cfg, &data, dimsweep_model(cfg.d_x, cfg.d_u, cfg.layers, seed)?, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(d_u: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: "ica_dimsweep".into(),
            d_x: 3,
            d_u,
            t: 300,
            t_test: 100,
            epochs: 2,
            batch_size: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn shapes_follow_d_u() {
        let d = dimsweep_data(&small(7), 0).unwrap();
        assert_eq!((d.train.x.cols(), d.train.u.cols()), (3, 7));
        let r = run_dimsweep_point(&small(7), 0).unwrap();
        assert_eq!(r.param("d_u"), Some(7.0));
        assert!(r.metric("mean_abs_corr").is_some());
    }

    #[test]
    fn contamination_applies_to_pairs() {
        let cfg = ExperimentConfig { epsilon: 0.3, ..small(2) };
        let d = dimsweep_data(&cfg, 1).unwrap();
        assert!(d.train.outlier.as_ref().unwrap().iter().any(|&f| f));
    }
}
