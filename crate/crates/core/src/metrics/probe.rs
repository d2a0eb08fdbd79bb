use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, DenseLayer, FeedforwardNet, Layer, Parameterized};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub test_fraction: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { test_fraction: 0.2, steps: 400, learning_rate: 0.05, l2: 1e-4, seed: 0 }
    }
}

/// Per-class shuffled split; returns (train, test) row indices.
pub fn stratified_split(labels: &[usize], classes: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&t| labels[t] == c).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test >= idx.len() {
            return Err(Error::Config(format!("class {c} is absent from the training split")));
        }
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn softmax_rows(z: &mut [f64], classes: usize) {
    for row in z.chunks_mut(classes) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
}

/// Multinomial logistic regression on frozen features; returns test accuracy.
pub fn linear_probe(features: &Tensor, labels: &[usize], classes: usize, cfg: &ProbeConfig) -> Result<f64> {
    if classes < 2 {
        return Err(Error::Config(format!("linear probe needs at least 2 classes, got {classes}")));
    }
    if labels.len() != features.rows() {
        return Err(Error::shape("linear probe labels", features.rows(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Config(format!("label {bad} out of range for {classes} classes")));
    }
    let (train, test) = stratified_split(labels, classes, cfg.test_fraction, cfg.seed)?;
    let d = features.cols();

    // standardize with training statistics
    let xtr = features.select_rows(&train);
    let stats: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            let c = xtr.column(j);
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64).sqrt();
            (m, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect();
    let norm = |x: Tensor| {
        let mut x = x;
        for t in 0..x.rows() {
            for (v, &(m, sd)) in x.row_mut(t).iter_mut().zip(&stats) {
                *v = (*v - m) / sd;
            }
        }
        x
    };
    let xtr = norm(xtr);
    let xte = norm(features.select_rows(&test));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9b0be);
    let mut net = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::glorot(d, classes, Activation::None, &mut rng)?)])?;
    let mut adam = AdamState::new(cfg.learning_rate, cfg.l2);
    let n = train.len() as f64;
    for _ in 0..cfg.steps {
        net.zero_grads();
        let mut p = net.forward_cached(&xtr)?.into_data();
        softmax_rows(&mut p, classes);
        for (row, &t) in p.chunks_mut(classes).zip(&train) {
            row[labels[t]] -= 1.0;
            row.iter_mut().for_each(|v| *v /= n);
        }
        net.backward(&Tensor::matrix(train.len(), classes, p)?)?;
        adam.adam_step(&mut net)?;
    }
    let z = net.forward(&xte)?;
    let correct = test
        .iter()
        .enumerate()
        .filter(|&(i, &t)| {
            let row = z.row(i);
            let best = (0..classes).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
            best == labels[t]
        })
        .count();
    Ok(correct as f64 / test.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn separable_two_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let data: Vec<f64> = labels
            .iter()
            .flat_map(|&l| [if l == 1 { 2.0 } else { -2.0 } + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let acc = linear_probe(&Tensor::matrix(1000, 2, data).unwrap(), &labels, 2, &ProbeConfig::default()).unwrap();
        assert!(acc > 0.99, "{acc}");
    }

    #[test]
    fn chance_level_with_random_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = 5000;
        let labels: Vec<usize> = (0..t).map(|_| rng.random_range(0..10)).collect();
        let feats = Tensor::matrix(t, 4, (0..t * 4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let acc = linear_probe(&feats, &labels, 10, &ProbeConfig::default()).unwrap();
        assert!((acc - 0.1).abs() < 0.02 + 0.02, "{acc}");
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i < 30)).collect();
        let (train, test) = stratified_split(&labels, 2, 0.2, 0).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        assert_eq!(test.iter().filter(|&&t| labels[t] == 1).count(), 6);
    }

    #[test]
    fn missing_class_is_config_error() {
        let labels = vec![0, 0, 0, 0, 1];
        let feats = Tensor::zeros(&[5, 1]);
        let cfg = ProbeConfig { test_fraction: 0.5, ..ProbeConfig::default() };
        assert!(matches!(linear_probe(&feats, &labels, 2, &cfg), Err(Error::Config(_))));
        assert!(matches!(linear_probe(&feats, &labels, 3, &ProbeConfig::default()), Err(Error::Config(_))));
    }
}
