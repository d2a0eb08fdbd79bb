//! The structured ratio model `r(x,u) = ψ(h_x(x), h_u(u)) + a(h_x(x)) + b(h_u(u))`.

mod head;
mod psi;

use std::collections::BTreeMap;

pub use head::Head;
pub use psi::{log_cosh, ElementwisePsi, Psi};

use crate::error::{Error, Result};
use crate::nn::{visit_prefixed, visit_prefixed_mut, FeedforwardNet, Parameterized};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
struct PassCache {
    n: usize,
    hx: Tensor,
    hu: Tensor,
    pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct RatioModel {
    pub h_x: FeedforwardNet,
    /// `None` means `h_u` evaluates `h_x`'s parameters.
    pub h_u: Option<FeedforwardNet>,
    pub psi: Psi,
    pub a: Head,
    pub b: Head,
    cache: Option<PassCache>,
}

/// Upstream gradient for [`RatioModel::grad_r`].
#[derive(Debug, Clone)]
pub enum Upstream {
    /// One value per aligned row.
    Aligned(Vec<f64>),
    /// A `T×T` matrix over all `(x(t), u(t'))` pairs.
    Cross(Tensor),
}

/// Named parameter gradients.
pub type Grads = BTreeMap<String, Vec<f64>>;

impl RatioModel {
    pub fn new(h_x: FeedforwardNet, h_u: Option<FeedforwardNet>, psi: Psi, a: Head, b: Head) -> Result<Self> {
        Self::build(h_x, h_u, psi, a, b, true)
    }

    /// Like [`RatioModel::new`] but lets `h_u` map into more dimensions than it
    /// reads, as the affine `h_u` of the dimensionality sweep does when `D_u < d_x`.
    pub fn new_wide_u(h_x: FeedforwardNet, h_u: FeedforwardNet, psi: Psi, a: Head, b: Head) -> Result<Self> {
        Self::build(h_x, Some(h_u), psi, a, b, false)
    }

    fn build(h_x: FeedforwardNet, h_u: Option<FeedforwardNet>, psi: Psi, a: Head, b: Head, strict_u: bool) -> Result<Self> {
        let dx = h_x.out_dim();
        if dx > h_x.in_dim() {
            return Err(Error::Config(format!("d_x={dx} exceeds D_x={}", h_x.in_dim())));
        }
        let du = match &h_u {
            Some(n) => {
                if strict_u && n.out_dim() > n.in_dim() {
                    return Err(Error::Config(format!("d_u={} exceeds D_u={}", n.out_dim(), n.in_dim())));
                }
                n.out_dim()
            }
            None => dx,
        };
        psi.check_dims(dx, du)?;
        a.check_dim(dx, "a")?;
        b.check_dim(du, "b")?;
        Ok(Self { h_x, h_u, psi, a, b, cache: None })
    }

    pub fn shares_h(&self) -> bool {
        self.h_u.is_none()
    }

    pub fn x_dim(&self) -> usize {
        self.h_x.in_dim()
    }

    pub fn u_dim(&self) -> usize {
        self.h_u.as_ref().unwrap_or(&self.h_x).in_dim()
    }

    /// The learned representation `h_x(x)`.
    pub fn represent(&self, x: &Tensor) -> Result<Tensor> {
        self.h_x.forward(x)
    }

    fn check(&self, x: &Tensor, u: &Tensor) -> Result<()> {
        if x.cols() != self.x_dim() || u.cols() != self.u_dim() {
            return Err(Error::Config(format!(
                "model expects x with {} and u with {} columns, got {} and {}",
                self.x_dim(),
                self.u_dim(),
                x.cols(),
                u.cols()
            )));
        }
        Ok(())
    }

    fn features(&self, x: &Tensor, u: &Tensor) -> Result<(Tensor, Tensor)> {
        let hx = self.h_x.forward(x)?;
        let hu = self.h_u.as_ref().unwrap_or(&self.h_x).forward(u)?;
        Ok((hx, hu))
    }

    fn combine(&self, hx: &Tensor, hu: &Tensor, pairs: &[(usize, usize)], psi: Vec<f64>) -> Result<Vec<f64>> {
        let a = self.a.eval(hx)?;
        let b = self.b.eval(hu)?;
        Ok(pairs.iter().zip(psi).map(|(&(i, j), p)| p + a[i] + b[j]).collect())
    }

    /// `r(x_i, u_j)` for each listed pair of row indices.
    pub fn eval_pairs(&self, x: &Tensor, u: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        self.check(x, u)?;
        check_pairs(pairs, x.rows(), u.rows())?;
        let (hx, hu) = self.features(x, u)?;
        let psi = self.psi.eval(&hx, &hu, pairs)?;
        self.combine(&hx, &hu, pairs, psi)
    }

    /// `r` on aligned rows.
    pub fn eval_r(&self, x: &Tensor, u: &Tensor) -> Result<Vec<f64>> {
        if x.rows() != u.rows() {
            return Err(Error::Config(format!("x has {} rows but u has {}", x.rows(), u.rows())));
        }
        self.eval_pairs(x, u, &aligned_pairs(x.rows()))
    }

    /// Entry `(t, t')` is `r(x(t), u(t'))`.
    pub fn eval_r_cross(&self, x: &Tensor, u: &Tensor) -> Result<Tensor> {
        let pairs = cross_pairs(x.rows(), u.rows());
        let v = self.eval_pairs(x, u, &pairs)?;
        Tensor::matrix(x.rows(), u.rows(), v)
    }

    /// Like [`eval_pairs`](Self::eval_pairs) but records what [`backward_pairs`](Self::backward_pairs) needs.
    pub fn forward_pairs(&mut self, x: &Tensor, u: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        self.check(x, u)?;
        check_pairs(pairs, x.rows(), u.rows())?;
        let n = x.rows();
        let (hx, hu) = match &mut self.h_u {
            Some(hu_net) => (self.h_x.forward_cached(x)?, hu_net.forward_cached(u)?),
            None => {
                let h = self.h_x.forward_cached(&Tensor::vstack(&[x, u])?)?;
                (h.slice_rows(0, n), h.slice_rows(n, h.rows()))
            }
        };
        let psi = self.psi.eval_cached(&hx, &hu, pairs)?;
        let a = self.a.eval_cached(&hx)?;
        let b = self.b.eval_cached(&hu)?;
        let r = pairs.iter().zip(psi).map(|(&(i, j), p)| p + a[i] + b[j]).collect();
        self.cache = Some(PassCache { n, hx, hu, pairs: pairs.to_vec() });
        Ok(r)
    }

    /// Accumulates gradients of `Σ_k dr_k · r(pair_k)` into every parameter.
    pub fn backward_pairs(&mut self, dr: &[f64]) -> Result<()> {
        let cache = self.cache.take().ok_or_else(|| Error::State("backward_pairs called without a recorded forward".into()))?;
        if dr.len() != cache.pairs.len() {
            let n = cache.pairs.len();
            self.cache = Some(cache);
            return Err(Error::shape("backward_pairs", n, dr.len()));
        }
        let PassCache { n, hx, hu, pairs } = cache;
        let mut dhx = Tensor::zeros(hx.shape());
        let mut dhu = Tensor::zeros(hu.shape());
        self.psi.backward(&hx, &hu, &pairs, dr, &mut dhx, &mut dhu)?;
        let mut da = vec![0.0; hx.rows()];
        let mut db = vec![0.0; hu.rows()];
        for (&(i, j), &g) in pairs.iter().zip(dr) {
            da[i] += g;
            db[j] += g;
        }
        self.a.backward(&hx, &da, &mut dhx)?;
        self.b.backward(&hu, &db, &mut dhu)?;
        match &mut self.h_u {
            Some(hu_net) => {
                self.h_x.backward(&dhx)?;
                hu_net.backward(&dhu)?;
            }
            None => {
                debug_assert_eq!(dhx.rows(), n);
                self.h_x.backward(&Tensor::vstack(&[&dhx, &dhu])?)?;
            }
        }
        Ok(())
    }

    /// Gradients of `Σ upstream · r` after zeroing any previous accumulation.
    pub fn grad_r(&mut self, x: &Tensor, u: &Tensor, upstream: &Upstream) -> Result<Grads> {
        self.zero_grads();
        match upstream {
            Upstream::Aligned(g) => {
                self.forward_pairs(x, u, &aligned_pairs(x.rows().min(u.rows())))?;
                self.backward_pairs(g)?;
            }
            Upstream::Cross(g) => {
                self.forward_pairs(x, u, &cross_pairs(x.rows(), u.rows()))?;
                self.backward_pairs(g.data())?;
            }
        }
        Ok(self.grads())
    }

    pub fn grads(&self) -> Grads {
        let mut out = Grads::new();
        self.visit_params(&mut |p, t, _| {
            out.insert(p.to_string(), t.grad().map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec));
        });
        out
    }
}

pub fn aligned_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|t| (t, t)).collect()
}

pub fn cross_pairs(n: usize, m: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
}

fn check_pairs(pairs: &[(usize, usize)], n: usize, m: usize) -> Result<()> {
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= m) {
        return Err(Error::Config(format!("pair ({i},{j}) out of range for {n}x{m} rows")));
    }
    Ok(())
}

impl Parameterized for RatioModel {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor, bool)) {
        visit_prefixed(&self.h_x, "h_x", f);
        if let Some(h) = &self.h_u {
            visit_prefixed(h, "h_u", f);
        }
        visit_prefixed(&self.psi, "psi", f);
        visit_prefixed(&self.a, "a", f);
        visit_prefixed(&self.b, "b", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor, bool)) {
        visit_prefixed_mut(&mut self.h_x, "h_x", f);
        if let Some(h) = &mut self.h_u {
            visit_prefixed_mut(h, "h_u", f);
        }
        visit_prefixed_mut(&mut self.psi, "psi", f);
        visit_prefixed_mut(&mut self.a, "a", f);
        visit_prefixed_mut(&mut self.b, "b", f);
    }
}
