//! Feedforward networks with layer-local backprop, Adam, and a finite-difference checker.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod net;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckReport};
pub use layers::{sigmoid, softplus, Activation, DenseLayer, MaxoutLayer};
pub use net::{FeedforwardNet, Layer};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Anything holding named trainable tensors. The boolean passed to visitors is
/// true for weights that receive the L2 penalty.
pub trait Parameterized {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor, bool));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor, bool));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, t, _| n += t.len());
        n
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, t, _| out.extend_from_slice(t.data()));
        out
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.param_count();
        if flat.len() != n {
            return Err(Error::shape("set_flat_params", n, flat.len()));
        }
        let mut off = 0;
        self.visit_params_mut(&mut |_, t, _| {
            let k = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + k]);
            off += k;
        });
        Ok(())
    }

    /// Gradients in visiting order; absent buffers read as zero.
    fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, t, _| match t.grad() {
            Some(g) => out.extend_from_slice(g),
            None => out.extend(std::iter::repeat_n(0.0, t.len())),
        });
        out
    }

    fn zero_grads(&mut self) {
        self.visit_params_mut(&mut |_, t, _| t.zero_grad());
    }

    fn named_params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.visit_params(&mut |p, t, _| out.push((p.to_string(), t.clone())));
        out
    }
}

/// Prefixes every path of an inner visitor with `prefix.`.
pub(crate) fn visit_prefixed<P: Parameterized + ?Sized>(p: &P, prefix: &str, f: &mut dyn FnMut(&str, &Tensor, bool)) {
    p.visit_params(&mut |path, t, d| f(&format!("{prefix}.{path}"), t, d));
}

pub(crate) fn visit_prefixed_mut<P: Parameterized + ?Sized>(p: &mut P, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor, bool)) {
    p.visit_params_mut(&mut |path, t, d| f(&format!("{prefix}.{path}"), t, d));
}
