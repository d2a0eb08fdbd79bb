use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{affine, affine_backward, Tensor};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    LeakyRelu(f64),
    Softplus,
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::LeakyRelu(s) if !(s > 0.0 && s < 1.0) => {
                Err(Error::Config(format!("leaky-relu slope must lie in (0,1), got {s}")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::None => z,
            Activation::LeakyRelu(s) => {
                if z >= 0.0 {
                    z
                } else {
                    s * z
                }
            }
            Activation::Softplus => softplus(z),
        }
    }

    /// Derivative with respect to the pre-activation.
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::None => 1.0,
            Activation::LeakyRelu(s) => {
                if z >= 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Softplus => sigmoid(z),
        }
    }
}

/// log(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn glorot(inp: usize, out: usize, rng: &mut impl Rng) -> Tensor {
    let a = (6.0 / (inp + out) as f64).sqrt();
    let data = (0..inp * out).map(|_| rng.random_range(-a..=a)).collect();
    Tensor::matrix(out, inp, data).expect("positive extents").with_grad()
}

#[derive(Debug, Clone)]
struct DenseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    batch: usize,
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
    cache: Option<DenseCache>,
}

impl DenseLayer {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        activation.validate()?;
        if weights.shape().len() != 2 {
            return Err(Error::shape("DenseLayer weights", "2-d", format!("{:?}", weights.shape())));
        }
        if bias.len() != weights.rows() {
            return Err(Error::shape("DenseLayer bias", weights.rows(), bias.len()));
        }
        let bias = Tensor::vector(bias.into_data())?;
        Ok(Self { weights: weights.with_grad(), bias: bias.with_grad(), activation, cache: None })
    }

    pub fn glorot(inp: usize, out: usize, activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        if inp == 0 || out == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        Self::new(glorot(inp, out, rng), Tensor::zeros(&[out]), activation)
    }

    pub fn identity(dim: usize) -> Self {
        let mut w = Tensor::zeros(&[dim, dim]);
        for i in 0..dim {
            w.set(i, i, 1.0);
        }
        Self::new(w, Tensor::zeros(&[dim]), Activation::None).expect("identity layer is valid")
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    fn pre(&self, x: &[f64], batch: usize) -> Vec<f64> {
        affine(x, batch, self.in_dim(), self.weights.data(), self.bias.data(), self.out_dim())
    }

    pub(crate) fn forward_raw(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut y = self.pre(x, batch);
        if self.activation != Activation::None {
            y.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        }
        y
    }

    pub(crate) fn forward_cached_raw(&mut self, x: &[f64], batch: usize) -> Vec<f64> {
        let pre = self.pre(x, batch);
        let y = pre.iter().map(|&z| self.activation.apply(z)).collect();
        self.cache = Some(DenseCache { input: x.to_vec(), pre, batch });
        y
    }

    pub(crate) fn backward_raw(&mut self, dy: &[f64]) -> Result<Vec<f64>> {
        let cache = self.cache.as_ref().ok_or_else(|| Error::State("dense backward without a recorded forward".into()))?;
        let (inp, out) = (self.in_dim(), self.out_dim());
        if dy.len() != cache.batch * out {
            return Err(Error::shape("dense backward", cache.batch * out, dy.len()));
        }
        let dz: Vec<f64> = dy.iter().zip(&cache.pre).map(|(&g, &z)| g * self.activation.derivative(z)).collect();
        let w = self.weights.data().to_vec();
        let (_, dw) = self.weights.data_and_grad_mut();
        let mut db = vec![0.0; out];
        let dx = affine_backward(&cache.input, &dz, cache.batch, inp, out, &w, dw, &mut db);
        self.bias.accumulate_grad(&db);
        Ok(dx)
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[derive(Debug, Clone)]
struct MaxoutCache {
    input: Vec<f64>,
    winner: Vec<usize>,
    batch: usize,
}

/// Elementwise maximum over `group_count` parallel affine pieces.
#[derive(Debug, Clone)]
pub struct MaxoutLayer {
    pub pieces: Vec<(Tensor, Tensor)>,
    cache: Option<MaxoutCache>,
}

impl MaxoutLayer {
    pub fn new(pieces: Vec<(Tensor, Tensor)>) -> Result<Self> {
        let first = pieces.first().ok_or_else(|| Error::Config("maxout needs at least one piece".into()))?;
        let shape = first.0.shape().to_vec();
        if shape.len() != 2 {
            return Err(Error::shape("maxout piece", "2-d", format!("{shape:?}")));
        }
        let mut out = Vec::with_capacity(pieces.len());
        for (w, b) in pieces {
            if w.shape() != shape.as_slice() {
                return Err(Error::shape("maxout piece", format!("{shape:?}"), format!("{:?}", w.shape())));
            }
            if b.len() != shape[0] {
                return Err(Error::shape("maxout bias", shape[0], b.len()));
            }
            out.push((w.with_grad(), Tensor::vector(b.into_data())?.with_grad()));
        }
        Ok(Self { pieces: out, cache: None })
    }

    pub fn glorot(inp: usize, out: usize, groups: usize, rng: &mut impl Rng) -> Result<Self> {
        if groups == 0 {
            return Err(Error::Config("maxout group count must be positive".into()));
        }
        let pieces = (0..groups).map(|_| (glorot(inp, out, rng), Tensor::zeros(&[out]))).collect();
        Self::new(pieces)
    }

    pub fn group_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn in_dim(&self) -> usize {
        self.pieces[0].0.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.pieces[0].0.rows()
    }

    fn eval(&self, x: &[f64], batch: usize) -> (Vec<f64>, Vec<usize>) {
        let (inp, out) = (self.in_dim(), self.out_dim());
        let mut best = vec![f64::NEG_INFINITY; batch * out];
        let mut winner = vec![0usize; batch * out];
        for (k, (w, b)) in self.pieces.iter().enumerate() {
            let z = affine(x, batch, inp, w.data(), b.data(), out);
            for (i, &v) in z.iter().enumerate() {
                if v > best[i] {
                    best[i] = v;
                    winner[i] = k;
                }
            }
        }
        (best, winner)
    }

    pub(crate) fn forward_raw(&self, x: &[f64], batch: usize) -> Vec<f64> {
        self.eval(x, batch).0
    }

    pub(crate) fn forward_cached_raw(&mut self, x: &[f64], batch: usize) -> Vec<f64> {
        let (y, winner) = self.eval(x, batch);
        self.cache = Some(MaxoutCache { input: x.to_vec(), winner, batch });
        y
    }

    pub(crate) fn backward_raw(&mut self, dy: &[f64]) -> Result<Vec<f64>> {
        let cache = self.cache.as_ref().ok_or_else(|| Error::State("maxout backward without a recorded forward".into()))?;
        let (inp, out) = (self.in_dim(), self.out_dim());
        if dy.len() != cache.batch * out {
            return Err(Error::shape("maxout backward", cache.batch * out, dy.len()));
        }
        let mut dx = vec![0.0; cache.batch * inp];
        for (k, (w, b)) in self.pieces.iter_mut().enumerate() {
            let dz: Vec<f64> = dy
                .iter()
                .zip(&cache.winner)
                .map(|(&g, &win)| if win == k { g } else { 0.0 })
                .collect();
            let wd = w.data().to_vec();
            let (_, dw) = w.data_and_grad_mut();
            let mut db = vec![0.0; out];
            let part = affine_backward(&cache.input, &dz, cache.batch, inp, out, &wd, dw, &mut db);
            b.accumulate_grad(&db);
            dx.iter_mut().zip(part).for_each(|(a, p)| *a += p);
        }
        Ok(dx)
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_of_minus_one() {
        assert_eq!(Activation::leaky().apply(-1.0), -0.2);
    }

    #[test]
    fn bad_slope_rejected() {
        assert!(Activation::LeakyRelu(1.5).validate().is_err());
        assert!(Activation::LeakyRelu(0.0).validate().is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn maxout_takes_larger_piece() {
        let p1 = (Tensor::matrix(1, 1, vec![3.0]).unwrap(), Tensor::zeros(&[1]));
        let p2 = (Tensor::matrix(1, 1, vec![5.0]).unwrap(), Tensor::zeros(&[1]));
        let m = MaxoutLayer::new(vec![p1, p2]).unwrap();
        assert_eq!(m.forward_raw(&[1.0], 1), vec![5.0]);
    }
}
