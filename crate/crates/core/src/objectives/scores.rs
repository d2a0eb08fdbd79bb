//! Objectives as functions of weighted score sets.
//!
//! Every objective takes the ratio values on positive (joint) pairs and on
//! negative (product) pairs together with their weights. Empirical estimators use
//! uniform weights `1/n`; population versions pass quadrature or probability
//! weights, so both share one implementation.

use crate::error::{Error, Result};
use crate::nn::{sigmoid, softplus};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub dpos: Vec<f64>,
    pub dneg: Vec<f64>,
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check(pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Config("objectives need at least one positive and one negative score".into()));
    }
    if pos.len() != wp.len() || neg.len() != wn.len() {
        return Err(Error::shape("score weights", format!("{}/{}", pos.len(), neg.len()), format!("{}/{}", wp.len(), wn.len())));
    }
    Ok(())
}

/// Logistic cross entropy `Σ w⁺ log(1+e^{−r⁺}) + Σ w⁻ log(1+e^{r⁻})`.
pub fn lr(pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64]) -> Result<LossGrad> {
    check(pos, wp, neg, wn)?;
    let mut loss = 0.0;
    let dpos = pos
        .iter()
        .zip(wp)
        .map(|(&r, &w)| {
            loss += w * softplus(-r);
            -w * sigmoid(-r)
        })
        .collect();
    let dneg = neg
        .iter()
        .zip(wn)
        .map(|(&r, &w)| {
            loss += w * softplus(r);
            w * sigmoid(r)
        })
        .collect();
    Ok(LossGrad { loss, dpos, dneg })
}

/// γ-cross entropy `−(1/γ) log[Σ w⁺ σ(kr⁺)^q + Σ w⁻ σ(−kr⁻)^q]` with `k = γ+1`, `q = γ/(γ+1)`.
pub fn gamma(pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64], gamma: f64) -> Result<LossGrad> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Config(format!(
            "gamma must be positive (got {gamma}); use the logistic objective `lr` for gamma = 0"
        )));
    }
    check(pos, wp, neg, wn)?;
    let k = gamma + 1.0;
    let q = gamma / k;
    // log of each weighted term, computed as q·(kz − softplus(kz)) to avoid overflow
    let lp: Vec<f64> = pos.iter().zip(wp).map(|(&r, &w)| w.ln() - q * softplus(-k * r)).collect();
    let ln: Vec<f64> = neg.iter().zip(wn).map(|(&r, &w)| w.ln() - q * softplus(k * r)).collect();
    let m = lp.iter().chain(&ln).copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Numerical("gamma objective has no mass".into()));
    }
    let z: f64 = lp.iter().chain(&ln).map(|&l| (l - m).exp()).sum();
    let loss = -(m + z.ln()) / gamma;
    let dpos = pos.iter().zip(&lp).map(|(&r, &l)| -(l - m).exp() / z * sigmoid(-k * r)).collect();
    let dneg = neg.iter().zip(&ln).map(|(&r, &l)| (l - m).exp() / z * sigmoid(k * r)).collect();
    Ok(LossGrad { loss, dpos, dneg })
}

/// Donsker–Varadhan `−Σ w⁺ r⁺ + log Σ w⁻ e^{r⁻}`.
pub fn dv(pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64]) -> Result<LossGrad> {
    check(pos, wp, neg, wn)?;
    let lin: f64 = pos.iter().zip(wp).map(|(r, w)| r * w).sum();
    let ls: Vec<f64> = neg.iter().zip(wn).map(|(&r, &w)| r + w.ln()).collect();
    let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = ls.iter().map(|&l| (l - m).exp()).sum();
    Ok(LossGrad {
        loss: -lin + m + z.ln(),
        dpos: wp.iter().map(|w| -w).collect(),
        dneg: ls.iter().map(|&l| (l - m).exp() / z).collect(),
    })
}

/// f-divergence bound `−Σ w⁺ r⁺ + Σ w⁻ e^{r⁻−1}`.
pub fn fdiv(pos: &[f64], wp: &[f64], neg: &[f64], wn: &[f64]) -> Result<LossGrad> {
    check(pos, wp, neg, wn)?;
    let lin: f64 = pos.iter().zip(wp).map(|(r, w)| r * w).sum();
    let dneg: Vec<f64> = neg.iter().zip(wn).map(|(&r, &w)| w * (r - 1.0).exp()).collect();
    Ok(LossGrad { loss: -lin + dneg.iter().sum::<f64>(), dpos: wp.iter().map(|w| -w).collect(), dneg })
}

/// InfoNCE on a `K×K` score matrix whose diagonal holds the aligned pairs.
/// Returns the loss and its gradient with respect to every entry.
pub fn infonce(r: &Tensor) -> Result<(f64, Tensor)> {
    let k = r.rows();
    if r.shape().len() != 2 || r.cols() != k {
        return Err(Error::shape("infonce", "square matrix", format!("{:?}", r.shape())));
    }
    if k < 2 {
        return Err(Error::Config(format!("InfoNCE needs a batch of at least 2, got {k}")));
    }
    let kf = k as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(&[k, k]);
    for i in 0..k {
        let row = r.row(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + z.ln();
        loss -= row[i] - lse + kf.ln();
        let g = grad.row_mut(i);
        for j in 0..k {
            g[j] = (row[j] - lse).exp() / kf;
        }
        g[i] -= 1.0 / kf;
    }
    Ok((loss / kf, grad))
}
