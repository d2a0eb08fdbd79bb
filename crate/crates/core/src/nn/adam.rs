use std::collections::BTreeMap;

use super::Parameterized;
use crate::error::{Error, Result};

/// Bias-corrected Adam with an L2 penalty folded into the gradient of decayed weights.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
    pub l2_coeff: f64,
    moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(learning_rate: f64, l2_coeff: f64) -> Self {
        Self {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
            l2_coeff,
            moments: BTreeMap::new(),
        }
    }

    /// One update from the gradients currently stored on `params`. Nothing is
    /// modified if any gradient is non-finite.
    pub fn adam_step<P: Parameterized + ?Sized>(&mut self, params: &mut P) -> Result<()> {
        let mut bad = None;
        params.visit_params(&mut |path, t, _| {
            if bad.is_none() && t.grad().is_some_and(|g| g.iter().any(|v| !v.is_finite())) {
                bad = Some(path.to_string());
            }
        });
        if let Some(path) = bad {
            return Err(Error::NonFinite { path: format!("gradient of {path}") });
        }

        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps, l2) = (self.beta1, self.beta2, self.learning_rate, self.eps_hat, self.l2_coeff);
        let moments = &mut self.moments;
        params.visit_params_mut(&mut |path, tensor, decay| {
            let n = tensor.len();
            let (m, v) = moments.entry(path.to_string()).or_insert_with(|| (vec![0.0; n], vec![0.0; n]));
            let (data, grad) = tensor.data_and_grad_mut();
            for i in 0..n {
                let g = if decay { grad[i] + l2 * data[i] } else { grad[i] };
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                data[i] -= lr * mh / (vh.sqrt() + eps);
            }
        });
        Ok(())
    }

    pub fn moment_count(&self) -> usize {
        self.moments.len()
    }
}
