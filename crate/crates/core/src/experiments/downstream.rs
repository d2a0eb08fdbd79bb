use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::{ExperimentConfig, Scenario};
use super::ica::record;
use super::record::RunRecord;
use super::{derive_seed, train_config};
use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::metrics::{linear_probe, robust_whiten, ProbeConfig};
use crate::nn::{Activation, FeedforwardNet};
use crate::ratio::{Head, Psi, RatioModel};
use crate::synth::{contaminate_pairs, ContaminationSpec, MixingNet, DEFAULT_MAX_CONDITION, DEFAULT_OUTLIER_OFFSET};
use crate::tensor::Tensor;
use crate::train::train;

pub const CLASSES: usize = 4;
/// Dimension of the class-carrying latent shared by both views.
pub const CLASS_DIM: usize = 2;
/// Learned representation size.
pub const REP_DIM: usize = 2;
const CLASS_RADIUS: f64 = 2.0;
const WITHIN_CLASS_SD: f64 = 0.5;
const VIEW_NOISE_SD: f64 = 0.3;
const NUISANCE_SD: f64 = 2.0;

/// Two views of a labelled latent. Class `c` has mean `2·(cos 2πc/4, sin 2πc/4)`;
/// each view adds its own small noise to the shared latent, appends independent
/// high-variance nuisance coordinates and passes through its own random mixing.
pub fn class_pairs(d_x: usize, d_u: usize, layers: usize, t: usize, seed: u64) -> Result<PairedBatch> {
    if d_x <= CLASS_DIM || d_u <= CLASS_DIM {
        return Err(Error::Config(format!("d_x and d_u must exceed {CLASS_DIM}, got d_x={d_x} d_u={d_u}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let within = Normal::new(0.0, WITHIN_CLASS_SD).expect("positive sd");
    let view = Normal::new(0.0, VIEW_NOISE_SD).expect("positive sd");
    let (mut xs, mut us, mut labels) = (Vec::with_capacity(t * d_x), Vec::with_capacity(t * d_u), Vec::with_capacity(t));
    for _ in 0..t {
        let c = rng.random_range(0..CLASSES);
        let angle = TAU * c as f64 / CLASSES as f64;
        let z = [CLASS_RADIUS * angle.cos() + within.sample(&mut rng), CLASS_RADIUS * angle.sin() + within.sample(&mut rng)];
        for (buf, d) in [(&mut xs, d_x), (&mut us, d_u)] {
            buf.extend(z.iter().map(|v| v + view.sample(&mut rng)));
            buf.extend((CLASS_DIM..d).map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                NUISANCE_SD * z
            }));
        }
        labels.push(c);
    }
    let mx = MixingNet::random(d_x, layers, DEFAULT_MAX_CONDITION, derive_seed(seed, 8))?;
    let mu = MixingNet::random(d_u, layers, DEFAULT_MAX_CONDITION, derive_seed(seed, 9))?;
    let mut b = PairedBatch::new(mx.mix(&Tensor::matrix(t, d_x, xs)?)?, mu.mix(&Tensor::matrix(t, d_u, us)?)?)?;
    b.labels = Some(labels);
    Ok(b)
}

/// Two maxout encoders (one hidden layer of width `4·D`) into `REP_DIM`, a
/// bilinear ψ and linear heads `a`, `b`.
pub fn encoder_model(d_x: usize, d_u: usize, seed: u64) -> Result<RatioModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
    let h_x = FeedforwardNet::maxout_mlp(d_x, 4 * d_x, 1, REP_DIM, 2, &mut rng)?;
    let h_u = FeedforwardNet::maxout_mlp(d_u, 4 * d_u, 1, REP_DIM, 2, &mut rng)?;
    let psi = Psi::bilinear(REP_DIM, REP_DIM, &mut rng);
    let a = FeedforwardNet::dense_mlp(&[REP_DIM, 1], Activation::None, &mut rng)?;
    let b = FeedforwardNet::dense_mlp(&[REP_DIM, 1], Activation::None, &mut rng)?;
    RatioModel::new(h_x, Some(h_u), psi, Head::Net(a), Head::Net(b))
}

/// Trains the encoders on (possibly contaminated) pairs, then fits a linear probe
/// on `h_x` of clean held-out rows. Also reports the probe on the untrained encoder.
pub fn run_downstream(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    if cfg.scenario()? != Scenario::Downstream {
        return Err(Error::Config(format!("scenario: run_downstream needs downstream, got {}", cfg.scenario)));
    }
    cfg.validate()?;
    let method = cfg.method()?;
    let start = Instant::now();
    let all = class_pairs(cfg.d_x, cfg.d_u, cfg.layers, cfg.t + cfg.t_test, derive_seed(seed, 1))?;
    let mut data = all.select(&(0..cfg.t).collect::<Vec<_>>());
    let test = all.select(&(cfg.t..cfg.t + cfg.t_test).collect::<Vec<_>>());
    if cfg.epsilon > 0.0 {
        let spec = ContaminationSpec::gaussian(cfg.epsilon, cfg.contamination_model, DEFAULT_OUTLIER_OFFSET)?;
        data = contaminate_pairs(&data, &spec, derive_seed(seed, 7))?;
    }
    let wg = cfg.whitening_gamma();
    let (wx, xw) = robust_whiten(&data.x, wg)?;
    let (_, uw) = robust_whiten(&data.u, wg)?;
    let data = PairedBatch::new(xw, uw)?;

    let mut model = encoder_model(cfg.d_x, cfg.d_u, seed)?;
    let test_x = wx.apply(&test.x)?;
    let labels = test.labels.as_ref().expect("labelled");
    let probe = ProbeConfig { seed: derive_seed(seed, 10), ..ProbeConfig::default() };
    let random_acc = linear_probe(&model.represent(&test_x)?, labels, CLASSES, &probe)?;
    let report = train(&mut model, &data, method, &train_config(cfg, seed))?;
    let mut metrics = BTreeMap::from([("random_init_accuracy".to_string(), random_acc)]);
    if !report.failed() {
        metrics.insert("probe_accuracy".into(), linear_probe(&model.represent(&test_x)?, labels, CLASSES, &probe)?);
    }
    Ok(record(cfg, method, seed, report.losses, metrics, start, report.failure))
}
