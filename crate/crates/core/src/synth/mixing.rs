use nalgebra::DMatrix;
use rand::Rng;

use super::sources::rng;
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::tensor::Tensor;

pub const DEFAULT_MAX_CONDITION: f64 = 1e3;
const SPECTRAL_NORM: f64 = 1.0;
const SLOPE: f64 = 0.2;

/// Random invertible mixing `f`: square linear maps with leaky-ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingNet {
    /// Row-major `D×D` matrices, applied in order.
    pub weights: Vec<DMatrix<f64>>,
    pub seed: u64,
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

impl MixingNet {
    /// `layers` matrices with i.i.d. U[−1,1] entries, each rescaled to unit
    /// spectral norm and redrawn while its condition number exceeds `max_cond`.
    pub fn random(dim: usize, layers: usize, max_cond: f64, seed: u64) -> Result<Self> {
        if dim == 0 || layers == 0 {
            return Err(Error::Config("mixing net needs positive dimension and depth".into()));
        }
        let mut r = rng(seed);
        let mut weights = Vec::with_capacity(layers);
        for _ in 0..layers {
            let mut tries = 0;
            let w = loop {
                tries += 1;
                let m = DMatrix::from_fn(dim, dim, |_, _| r.random_range(-1.0..=1.0));
                if condition_number(&m) <= max_cond {
                    break m;
                }
                if tries > 10_000 {
                    return Err(Error::Numerical(format!("no mixing matrix with condition <= {max_cond} after {tries} draws")));
                }
            };
            let norm = w.singular_values().max();
            weights.push(w * (SPECTRAL_NORM / norm));
        }
        Ok(Self { weights, seed })
    }

    pub fn identity(dim: usize) -> Self {
        Self { weights: vec![DMatrix::identity(dim, dim)], seed: 0 }
    }

    pub fn dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    /// `x = W_L φ(… φ(W_1 s))` row by row.
    pub fn mix(&self, s: &Tensor) -> Result<Tensor> {
        let d = self.dim();
        if s.cols() != d {
            return Err(Error::shape("mix", d, s.cols()));
        }
        let act = Activation::LeakyRelu(SLOPE);
        let last = self.weights.len() - 1;
        let mut out = Vec::with_capacity(s.len());
        let mut buf = vec![0.0; d];
        for t in 0..s.rows() {
            let mut h = s.row(t).to_vec();
            for (l, w) in self.weights.iter().enumerate() {
                for i in 0..d {
                    buf[i] = (0..d).map(|j| w[(i, j)] * h[j]).sum();
                }
                if l != last {
                    buf.iter_mut().for_each(|v| *v = act.apply(*v));
                }
                h.copy_from_slice(&buf);
            }
            out.extend_from_slice(&h);
        }
        Tensor::matrix(s.rows(), d, out)
    }

    /// Layerwise inverse: linear solve, then inverse leaky-ReLU.
    pub fn invert(&self, x: &Tensor) -> Result<Tensor> {
        let d = self.dim();
        if x.cols() != d {
            return Err(Error::shape("invert", d, x.cols()));
        }
        let lus: Vec<_> = self.weights.iter().map(|w| w.clone().lu()).collect();
        let last = self.weights.len() - 1;
        let mut out = Vec::with_capacity(x.len());
        for t in 0..x.rows() {
            let mut h = nalgebra::DVector::from_row_slice(x.row(t));
            for l in (0..=last).rev() {
                if l != last {
                    h.iter_mut().for_each(|v| {
                        if *v < 0.0 {
                            *v /= SLOPE
                        }
                    });
                }
                h = lus[l].solve(&h).ok_or_else(|| Error::Numerical("singular mixing matrix".into()))?;
            }
            out.extend(h.iter());
        }
        Tensor::matrix(x.rows(), d, out)
    }
}

pub fn mix(net: &MixingNet, s: &Tensor) -> Result<Tensor> {
    net.mix(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::sources::gen_ar_laplace;

    #[test]
    fn identity_mixing() {
        let s = gen_ar_laplace(0.5, 3, 20, 0).unwrap();
        assert_eq!(MixingNet::identity(3).mix(&s).unwrap(), s);
    }

    #[test]
    fn weights_are_well_conditioned() {
        let net = MixingNet::random(6, 4, 1e3, 3).unwrap();
        for w in &net.weights {
            assert!(condition_number(w) <= 1e3);
            assert!(w.singular_values().max() <= 2.0);
        }
    }

    #[test]
    fn affine_mixing_recovered_by_solve() {
        let s = gen_ar_laplace(0.5, 4, 200, 1).unwrap();
        let net = MixingNet::random(4, 1, 1e3, 2).unwrap();
        let back = net.invert(&net.mix(&s).unwrap()).unwrap();
        let err = back.data().iter().zip(s.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn deep_mixing_is_invertible() {
        let s = gen_ar_laplace(0.7, 5, 1000, 4).unwrap();
        for layers in [3, 5] {
            let net = MixingNet::random(5, layers, 1e3, 5).unwrap();
            let back = net.invert(&net.mix(&s).unwrap()).unwrap();
            let err = back.data().iter().zip(s.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "L={layers}: {err}");
        }
    }
}
