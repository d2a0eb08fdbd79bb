use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sources::side_rng;
use crate::data::PairedBatch;
use crate::error::{Error, Result};

/// Where outliers come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierDensity {
    /// `N(−ρ s(t−1), I)`, the time-series outlier conditional.
    SignFlipped { rho: f64 },
    /// Independent coordinates `N(offset, scale²)`.
    Gaussian { offset: f64, scale: f64 },
}

pub const DEFAULT_OUTLIER_OFFSET: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub epsilon: f64,
    /// 1: only `u` is contaminated. 2: `(x, u)` jointly.
    pub model: u8,
    pub outlier: OutlierDensity,
}

impl ContaminationSpec {
    pub fn clean() -> Self {
        Self { epsilon: 0.0, model: 2, outlier: OutlierDensity::Gaussian { offset: DEFAULT_OUTLIER_OFFSET, scale: 1.0 } }
    }

    pub fn timeseries(epsilon: f64, rho: f64) -> Result<Self> {
        let s = Self { epsilon, model: 2, outlier: OutlierDensity::SignFlipped { rho } };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(epsilon: f64, model: u8, offset: f64) -> Result<Self> {
        let s = Self { epsilon, model, outlier: OutlierDensity::Gaussian { offset, scale: 1.0 } };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0,1), got {}", self.epsilon)));
        }
        if self.model != 1 && self.model != 2 {
            return Err(Error::Config(format!("unknown contamination model {}", self.model)));
        }
        Ok(())
    }

    fn draw_row(&self, dim: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        match self.outlier {
            OutlierDensity::Gaussian { offset, scale } => Ok((0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    offset + scale * z
                })
                .collect()),
            OutlierDensity::SignFlipped { .. } => {
                Err(Error::Config("the sign-flipped outlier density needs the time-series generator".into()))
            }
        }
    }
}

/// Replaces a Bernoulli(ε) subset of rows with outliers: `u` only under model 1,
/// both `x` and `u` under model 2. Flags mark replaced rows.
pub fn contaminate_pairs(batch: &PairedBatch, spec: &ContaminationSpec, seed: u64) -> Result<PairedBatch> {
    spec.validate()?;
    let mut out = batch.clone();
    let mut flags = batch.outlier.clone().unwrap_or_else(|| vec![false; batch.len()]);
    if spec.epsilon == 0.0 {
        return Ok(out);
    }
    let mut rng = side_rng(seed, 2);
    let (dx, du) = (batch.x.cols(), batch.u.cols());
    for t in 0..batch.len() {
        if rng.random::<f64>() >= spec.epsilon {
            continue;
        }
        flags[t] = true;
        if spec.model == 2 {
            let row = spec.draw_row(dx, &mut rng)?;
            out.x.row_mut(t).copy_from_slice(&row);
        }
        let row = spec.draw_row(du, &mut rng)?;
        out.u.row_mut(t).copy_from_slice(&row);
    }
    out.outlier = Some(flags);
    Ok(out)
}

/// Fraction of flagged rows.
pub fn outlier_fraction(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&f| f).count() as f64 / flags.len().max(1) as f64
}
