use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Aligned positive pairs `(x(t), u(t))` with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBatch {
    pub x: Tensor,
    pub u: Tensor,
    pub s: Option<Tensor>,
    /// Nuisance components, when the generator has them.
    pub n: Option<Tensor>,
    pub outlier: Option<Vec<bool>>,
    pub labels: Option<Vec<usize>>,
}

impl PairedBatch {
    pub fn new(x: Tensor, u: Tensor) -> Result<Self> {
        if x.rows() != u.rows() {
            return Err(Error::shape("PairedBatch", x.rows(), u.rows()));
        }
        Ok(Self { x, u, s: None, n: None, outlier: None, labels: None })
    }

    pub fn with_sources(mut self, s: Tensor) -> Result<Self> {
        if s.rows() != self.len() {
            return Err(Error::shape("PairedBatch sources", self.len(), s.rows()));
        }
        self.s = Some(s);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Only the observed pairs; ground truth, nuisance, flags and labels are dropped.
    pub fn clone_without_truth(&self) -> PairedBatch {
        PairedBatch { x: self.x.clone(), u: self.u.clone(), s: None, n: None, outlier: None, labels: None }
    }

    /// Rows `idx` of every field.
    pub fn select(&self, idx: &[usize]) -> PairedBatch {
        PairedBatch {
            x: self.x.select_rows(idx),
            u: self.u.select_rows(idx),
            s: self.s.as_ref().map(|s| s.select_rows(idx)),
            n: self.n.as_ref().map(|n| n.select_rows(idx)),
            outlier: self.outlier.as_ref().map(|f| idx.iter().map(|&i| f[i]).collect()),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }
}
