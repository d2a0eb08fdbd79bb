//! Contrastive objectives evaluated on a [`RatioModel`].

mod schedule;
pub mod scores;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use schedule::{gamma_at_epoch, GammaConfig};
pub use scores::LossGrad;

use crate::data::PairedBatch;
use crate::error::{Error, Result};
use crate::nn::Parameterized;
use crate::ratio::{aligned_pairs, cross_pairs, Grads, RatioModel};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Lr,
    Gamma(f64),
    Dv,
    Fdiv,
    InfoNce,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Lr => "lr",
            Objective::Gamma(_) => "gamma",
            Objective::Dv => "dv",
            Objective::Fdiv => "fdiv",
            Objective::InfoNce => "infonce",
        }
    }

    /// Loss and score gradients for weighted positive and negative scores.
    /// InfoNCE needs a score matrix and is rejected here.
    pub fn on_scores(&self, pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64]) -> Result<LossGrad> {
        match *self {
            Objective::Lr => scores::lr(pos, wp, neg, wn),
            Objective::Gamma(g) => scores::gamma(pos, wp, neg, wn, g),
            Objective::Dv => scores::dv(pos, wp, neg, wn),
            Objective::Fdiv => scores::fdiv(pos, wp, neg, wn),
            Objective::InfoNce => Err(Error::Config("InfoNCE is defined on a score matrix, not score sets".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    Permutation,
    FullCross,
}

/// How negatives `(x(t), u*)` are formed.
#[derive(Debug, Clone, PartialEq)]
pub enum NegativePairing {
    /// `u_p(t) = u(perm[t])`. A uniform shuffle, so fixed points are allowed.
    Permutation(Vec<usize>),
    /// Every `(x(t), u(t'))`, diagonal included.
    FullCross,
}

impl NegativePairing {
    pub fn permutation(n: usize, rng: &mut impl Rng) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        NegativePairing::Permutation(p)
    }

    pub fn draw(mode: PairingMode, n: usize, rng: &mut impl Rng) -> Self {
        match mode {
            PairingMode::Permutation => Self::permutation(n, rng),
            PairingMode::FullCross => NegativePairing::FullCross,
        }
    }

    fn pairs(&self, n: usize, m: usize) -> Result<Vec<(usize, usize)>> {
        match self {
            NegativePairing::Permutation(p) => {
                if p.len() != n {
                    return Err(Error::shape("negative permutation", n, p.len()));
                }
                Ok(p.iter().enumerate().map(|(t, &j)| (t, j)).collect())
            }
            NegativePairing::FullCross => Ok(cross_pairs(n, m)),
        }
    }
}

fn batch_pairs(n: usize, pairing: &NegativePairing) -> Result<(Vec<(usize, usize)>, usize)> {
    let mut pairs = aligned_pairs(n);
    pairs.extend(pairing.pairs(n, n)?);
    Ok((pairs, n))
}

/// Objective value without touching gradients.
pub fn objective_value(model: &RatioModel, x: &Tensor, u: &Tensor, pairing: &NegativePairing, obj: Objective) -> Result<f64> {
    let n = check_batch(x, u, obj)?;
    if obj == Objective::InfoNce {
        return Ok(scores::infonce(&model.eval_r_cross(x, u)?)?.0);
    }
    let (pairs, np) = batch_pairs(n, pairing)?;
    let r = model.eval_pairs(x, u, &pairs)?;
    let (pos, neg) = r.split_at(np);
    Ok(obj.on_scores(pos, &scores::uniform(pos.len()), neg, &scores::uniform(neg.len()))?.loss)
}

/// Objective value; gradients are zeroed and then accumulated on the model's parameters.
pub fn objective_loss(model: &mut RatioModel, x: &Tensor, u: &Tensor, pairing: &NegativePairing, obj: Objective) -> Result<f64> {
    let n = check_batch(x, u, obj)?;
    model.zero_grads();
    if obj == Objective::InfoNce {
        let r = model.forward_pairs(x, u, &cross_pairs(n, n))?;
        let (loss, g) = scores::infonce(&Tensor::matrix(n, n, r)?)?;
        model.backward_pairs(g.data())?;
        return Ok(loss);
    }
    let (pairs, np) = batch_pairs(n, pairing)?;
    let r = model.forward_pairs(x, u, &pairs)?;
    let (pos, neg) = r.split_at(np);
    let lg = obj.on_scores(pos, &scores::uniform(pos.len()), neg, &scores::uniform(neg.len()))?;
    let mut dr = lg.dpos;
    dr.extend(lg.dneg);
    model.backward_pairs(&dr)?;
    Ok(lg.loss)
}

fn check_batch(x: &Tensor, u: &Tensor, obj: Objective) -> Result<usize> {
    if x.rows() != u.rows() {
        return Err(Error::shape("batch", x.rows(), u.rows()));
    }
    if obj == Objective::InfoNce && x.rows() < 2 {
        return Err(Error::Config(format!("InfoNCE needs a batch of at least 2, got {}", x.rows())));
    }
    Ok(x.rows())
}

fn with_grads(model: &mut RatioModel, batch: &PairedBatch, pairing: &NegativePairing, obj: Objective) -> Result<(f64, Grads)> {
    let loss = objective_loss(model, &batch.x, &batch.u, pairing, obj)?;
    Ok((loss, model.grads()))
}

pub fn j_lr(model: &mut RatioModel, batch: &PairedBatch, pairing: &NegativePairing) -> Result<(f64, Grads)> {
    with_grads(model, batch, pairing, Objective::Lr)
}

/// Ĵγ with permutation negatives, J̃γ with full-cross negatives.
pub fn j_gamma(model: &mut RatioModel, batch: &PairedBatch, pairing: &NegativePairing, gamma: f64) -> Result<(f64, Grads)> {
    with_grads(model, batch, pairing, Objective::Gamma(gamma))
}

pub fn j_dv(model: &mut RatioModel, batch: &PairedBatch, pairing: &NegativePairing) -> Result<(f64, Grads)> {
    with_grads(model, batch, pairing, Objective::Dv)
}

pub fn j_fdiv(model: &mut RatioModel, batch: &PairedBatch, pairing: &NegativePairing) -> Result<(f64, Grads)> {
    with_grads(model, batch, pairing, Objective::Fdiv)
}

pub fn j_infonce(model: &mut RatioModel, batch: &PairedBatch) -> Result<(f64, Grads)> {
    with_grads(model, batch, &NegativePairing::FullCross, Objective::InfoNce)
}
