use rand::Rng;

use super::layers::{Activation, DenseLayer, MaxoutLayer};
use super::Parameterized;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    Maxout(MaxoutLayer),
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Dense(l) => l.in_dim(),
            Layer::Maxout(l) => l.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Dense(l) => l.out_dim(),
            Layer::Maxout(l) => l.out_dim(),
        }
    }

    fn forward_raw(&self, x: &[f64], batch: usize) -> Vec<f64> {
        match self {
            Layer::Dense(l) => l.forward_raw(x, batch),
            Layer::Maxout(l) => l.forward_raw(x, batch),
        }
    }

    fn forward_cached_raw(&mut self, x: &[f64], batch: usize) -> Vec<f64> {
        match self {
            Layer::Dense(l) => l.forward_cached_raw(x, batch),
            Layer::Maxout(l) => l.forward_cached_raw(x, batch),
        }
    }

    fn backward_raw(&mut self, dy: &[f64]) -> Result<Vec<f64>> {
        match self {
            Layer::Dense(l) => l.backward_raw(dy),
            Layer::Maxout(l) => l.backward_raw(dy),
        }
    }

    fn clear_cache(&mut self) {
        match self {
            Layer::Dense(l) => l.clear_cache(),
            Layer::Maxout(l) => l.clear_cache(),
        }
    }
}

/// A feedforward chain. With no layers the net is the identity on `in_dim` columns.
#[derive(Debug, Clone)]
pub struct FeedforwardNet {
    layers: Vec<Layer>,
    in_dim: usize,
    cached_batch: Option<usize>,
}

impl FeedforwardNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::Config("a net needs at least one layer; use identity()".into()))?;
        let in_dim = first.in_dim();
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Config(format!(
                    "layer {} outputs {} columns but layer {} expects {}",
                    i,
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers, in_dim, cached_batch: None })
    }

    pub fn identity(dim: usize) -> Self {
        Self { layers: Vec::new(), in_dim: dim, cached_batch: None }
    }

    /// `hidden` maxout layers of width `width` followed by a linear map to `out`.
    pub fn maxout_mlp(inp: usize, width: usize, hidden: usize, out: usize, groups: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden + 1);
        let mut d = inp;
        for _ in 0..hidden {
            layers.push(Layer::Maxout(MaxoutLayer::glorot(d, width, groups, rng)?));
            d = width;
        }
        layers.push(Layer::Dense(DenseLayer::glorot(d, out, Activation::None, rng)?));
        Self::new(layers)
    }

    /// Dense layers with `act` on every hidden layer and none on the output.
    pub fn dense_mlp(sizes: &[usize], act: Activation, rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config("dense_mlp needs at least input and output sizes".into()));
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let a = if i + 1 == n { Activation::None } else { act };
                DenseLayer::glorot(sizes[i], sizes[i + 1], a, rng).map(Layer::Dense)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(self.in_dim, Layer::out_dim)
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape().len() != 2 || input.cols() != self.in_dim {
            return Err(Error::Config(format!(
                "net expects {} input columns, got shape {:?}",
                self.in_dim,
                input.shape()
            )));
        }
        Ok(())
    }

    /// Pure evaluation; safe to call concurrently on a shared net.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let batch = input.rows();
        let mut h = input.data().to_vec();
        for l in &self.layers {
            h = l.forward_raw(&h, batch);
        }
        Tensor::matrix(batch, self.out_dim(), h)
    }

    /// Evaluation that records per-layer activations for a later [`backward`](Self::backward).
    pub fn forward_cached(&mut self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let batch = input.rows();
        let mut h = input.data().to_vec();
        for l in &mut self.layers {
            h = l.forward_cached_raw(&h, batch);
        }
        self.cached_batch = Some(batch);
        Tensor::matrix(batch, self.out_dim(), h)
    }

    /// Accumulates parameter gradients of `Σ upstream ⊙ output` and returns the input gradient.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let batch = self.cached_batch.ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        if upstream.rows() != batch || upstream.cols() != self.out_dim() {
            return Err(Error::shape(
                "FeedforwardNet::backward",
                format!("[{batch}, {}]", self.out_dim()),
                format!("{:?}", upstream.shape()),
            ));
        }
        let mut g = upstream.data().to_vec();
        for l in self.layers.iter_mut().rev() {
            g = l.backward_raw(&g)?;
        }
        Tensor::matrix(batch, self.in_dim, g)
    }

    pub fn clear_cache(&mut self) {
        self.cached_batch = None;
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }
}

impl Parameterized for FeedforwardNet {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor, bool)) {
        for (i, l) in self.layers.iter().enumerate() {
            match l {
                Layer::Dense(d) => {
                    f(&format!("layers.{i}.w"), &d.weights, true);
                    f(&format!("layers.{i}.b"), &d.bias, false);
                }
                Layer::Maxout(m) => {
                    for (k, (w, b)) in m.pieces.iter().enumerate() {
                        f(&format!("layers.{i}.piece{k}.w"), w, true);
                        f(&format!("layers.{i}.piece{k}.b"), b, false);
                    }
                }
            }
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor, bool)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            match l {
                Layer::Dense(d) => {
                    f(&format!("layers.{i}.w"), &mut d.weights, true);
                    f(&format!("layers.{i}.b"), &mut d.bias, false);
                }
                Layer::Maxout(m) => {
                    for (k, (w, b)) in m.pieces.iter_mut().enumerate() {
                        f(&format!("layers.{i}.piece{k}.w"), w, true);
                        f(&format!("layers.{i}.piece{k}.b"), b, false);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dense_passes_input_through() {
        let net = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::identity(2))]).unwrap();
        let y = net.forward(&Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
    }

    #[test]
    fn wrong_width_is_config_error() {
        let net = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::identity(2))]).unwrap();
        let err = net.forward(&Tensor::zeros(&[1, 3])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn incompatible_layers_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = DenseLayer::glorot(2, 3, Activation::None, &mut rng).unwrap();
        let b = DenseLayer::glorot(4, 1, Activation::None, &mut rng).unwrap();
        assert!(FeedforwardNet::new(vec![Layer::Dense(a), Layer::Dense(b)]).is_err());
    }

    #[test]
    fn backward_needs_forward() {
        let mut net = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::identity(2))]).unwrap();
        let err = net.backward(&Tensor::zeros(&[1, 2])).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn scalar_chain_rule() {
        let w = Tensor::matrix(1, 1, vec![0.7]).unwrap();
        let mut net = FeedforwardNet::new(vec![Layer::Dense(DenseLayer::new(w, Tensor::zeros(&[1]), Activation::None).unwrap())]).unwrap();
        net.forward_cached(&Tensor::matrix(1, 1, vec![3.0]).unwrap()).unwrap();
        net.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(net.flat_grads(), vec![3.0, 1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = FeedforwardNet::maxout_mlp(3, 6, 2, 2, 2, &mut rng).unwrap();
        let x = Tensor::matrix(4, 3, (0..12).map(|i| i as f64 * 0.1 - 0.5).collect()).unwrap();
        net.forward_cached(&x).unwrap();
        net.backward(&Tensor::zeros(&[4, 2])).unwrap();
        assert!(net.flat_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn maxout_net_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = FeedforwardNet::maxout_mlp(3, 5, 2, 2, 2, &mut rng).unwrap();
        let x = Tensor::matrix(4, 3, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let up = Tensor::matrix(4, 2, (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let p0 = net.flat_params();
        let report = grad_check(
            |p| {
                let mut n = net.clone();
                n.set_flat_params(p).unwrap();
                n.zero_grads();
                let y = n.forward_cached(&x).unwrap();
                n.backward(&up).unwrap();
                let loss = y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
                (loss, n.flat_grads())
            },
            &p0,
            1e-5,
        );
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }

    #[test]
    fn forward_is_bitwise_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = FeedforwardNet::maxout_mlp(4, 8, 1, 4, 2, &mut rng).unwrap();
        let x = Tensor::matrix(5, 4, (0..20).map(|i| (i as f64).sin()).collect()).unwrap();
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }
}
