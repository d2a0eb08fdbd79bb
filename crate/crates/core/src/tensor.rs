//! Dense row-major `f64` tensors with an optional gradient accumulator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("tensor extents must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape("Tensor::new", n, data.len()));
        }
        Ok(Self { shape: shape.to_vec(), data, grad: None })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; n], grad: None }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Config("ragged rows".into()));
        }
        Self::new(&[r, c], rows.concat())
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(&[rows, cols], data)
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(&[n], data)
    }

    /// Attaches a zeroed gradient buffer.
    pub fn with_grad(mut self) -> Self {
        self.grad = Some(vec![0.0; self.data.len()]);
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Product of all trailing extents (1 for vectors).
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [f64]> {
        self.grad.as_deref_mut()
    }

    /// Data and gradient borrowed together (gradient created on demand).
    pub fn data_and_grad_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.data.len();
        let g = self.grad.get_or_insert_with(|| vec![0.0; n]);
        (&mut self.data, g)
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn accumulate_grad(&mut self, delta: &[f64]) {
        let n = self.data.len();
        let g = self.grad.get_or_insert_with(|| vec![0.0; n]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let c = self.cols();
        self.data[i * c + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    /// Selects rows by index (repeats allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Tensor {
        let c = self.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = idx.len();
        Tensor { shape, data, grad: None }
    }

    /// Contiguous row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Tensor {
        let c = self.cols();
        let mut shape = self.shape.clone();
        shape[0] = end - start;
        Tensor { shape, data: self.data[start * c..end * c].to_vec(), grad: None }
    }

    /// Column range `[start, end)` of a matrix.
    pub fn slice_cols(&self, start: usize, end: usize) -> Tensor {
        let w = end - start;
        let mut data = Vec::with_capacity(self.rows() * w);
        for i in 0..self.rows() {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Tensor { shape: vec![self.rows(), w], data, grad: None }
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(parts: &[&Tensor]) -> Result<Tensor> {
        let c = parts.first().map(|t| t.cols()).ok_or_else(|| Error::Config("vstack of nothing".into()))?;
        if parts.iter().any(|t| t.cols() != c) {
            return Err(Error::shape("vstack", c, "mixed column counts"));
        }
        let rows = parts.iter().map(|t| t.rows()).sum();
        let data = parts.iter().flat_map(|t| t.data.iter().copied()).collect();
        Tensor::matrix(rows, c, data)
    }

    /// Concatenates matrices with equal row counts horizontally.
    pub fn hstack(parts: &[&Tensor]) -> Result<Tensor> {
        let r = parts.first().map(|t| t.rows()).ok_or_else(|| Error::Config("hstack of nothing".into()))?;
        if parts.iter().any(|t| t.rows() != r) {
            return Err(Error::shape("hstack", r, "mixed row counts"));
        }
        let c: usize = parts.iter().map(|t| t.cols()).sum();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for t in parts {
                data.extend_from_slice(t.row(i));
            }
        }
        Tensor::matrix(r, c, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `out[b×o] = x[b×i] · wᵀ` with `w` stored `o×i`, plus optional bias.
pub(crate) fn affine(x: &[f64], batch: usize, inp: usize, w: &[f64], bias: &[f64], out: usize) -> Vec<f64> {
    let mut y = vec![0.0; batch * out];
    for b in 0..batch {
        let xr = &x[b * inp..(b + 1) * inp];
        let yr = &mut y[b * out..(b + 1) * out];
        for (o, yo) in yr.iter_mut().enumerate() {
            let wr = &w[o * inp..(o + 1) * inp];
            let mut acc = bias[o];
            for k in 0..inp {
                acc += wr[k] * xr[k];
            }
            *yo = acc;
        }
    }
    y
}

/// Backward of [`affine`]: accumulates `dW += dyᵀ x`, `db += Σ dy`, returns `dx = dy · W`.
pub(crate) fn affine_backward(
    x: &[f64],
    dy: &[f64],
    batch: usize,
    inp: usize,
    out: usize,
    w: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; batch * inp];
    for b in 0..batch {
        let xr = &x[b * inp..(b + 1) * inp];
        let dyr = &dy[b * out..(b + 1) * out];
        let dxr = &mut dx[b * inp..(b + 1) * inp];
        for o in 0..out {
            let g = dyr[o];
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            let wr = &w[o * inp..(o + 1) * inp];
            let dwr = &mut dw[o * inp..(o + 1) * inp];
            for k in 0..inp {
                dwr[k] += g * xr[k];
                dxr[k] += g * wr[k];
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_must_match_shape() {
        assert!(Tensor::new(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(&[0, 3], vec![]).is_err());
        let t = Tensor::new(&[2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.cols(), 3);
    }

    #[test]
    fn grad_has_same_length() {
        let t = Tensor::zeros(&[4, 2]).with_grad();
        assert_eq!(t.grad().unwrap().len(), t.len());
    }

    #[test]
    fn stacking() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let v = Tensor::vstack(&[&a, &b]).unwrap();
        assert_eq!(v.shape(), &[3, 2]);
        assert_eq!(v.row(2), &[5.0, 6.0]);
        let h = Tensor::hstack(&[&b, &b.slice_cols(0, 1)]).unwrap();
        assert_eq!(h.row(1), &[5.0, 6.0, 5.0]);
    }
}
