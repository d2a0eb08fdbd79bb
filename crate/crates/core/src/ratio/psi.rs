use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::layers::glorot;
use crate::nn::{visit_prefixed, visit_prefixed_mut, FeedforwardNet, Parameterized};
use crate::tensor::Tensor;

/// Per-coordinate parameters of `Σ_i −f(a_i1 h_xi + a_i2 h_ui + b_i) − (ā_i h_xi + b̄_i)² + c`
/// with `f = |·|` (`PclAbs`) or `f = log cosh` (`LogCosh`). The minus sign makes
/// the family contain the log-ratio of Laplace-like conditionals.
#[derive(Debug, Clone)]
pub struct ElementwisePsi {
    pub a1: Tensor,
    pub a2: Tensor,
    pub b: Tensor,
    pub abar: Tensor,
    pub bbar: Tensor,
    pub c: Tensor,
}

impl ElementwisePsi {
    /// `a_i1 = 1`, `a_i2 = −1`, everything else zero.
    pub fn new(d: usize) -> Self {
        let v = |x: f64| Tensor::vector(vec![x; d]).expect("d > 0").with_grad();
        Self {
            a1: v(1.0),
            a2: v(-1.0),
            b: v(0.0),
            abar: v(0.0),
            bbar: v(0.0),
            c: Tensor::vector(vec![0.0]).unwrap().with_grad(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a1.len()
    }
}

#[derive(Debug, Clone)]
pub enum Psi {
    /// `h_xᵀ W h_u` with `W` of shape `d_x × d_u`.
    Bilinear { w: Tensor },
    PclAbs(ElementwisePsi),
    LogCosh(ElementwisePsi),
    /// A net on the concatenation `[h_x; h_u]` with one output.
    Mlp(FeedforwardNet),
}

fn neg_abs(z: f64) -> f64 {
    -z.abs()
}

fn neg_abs_prime(z: f64) -> f64 {
    -z.signum()
}

fn neg_log_cosh(z: f64) -> f64 {
    -log_cosh(z)
}

fn neg_tanh(z: f64) -> f64 {
    -z.tanh()
}

/// log cosh z, stable for large |z|.
pub fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Psi {
    pub fn bilinear(dx: usize, du: usize, rng: &mut impl Rng) -> Self {
        Psi::Bilinear { w: glorot(du, dx, rng) }
    }

    pub fn bilinear_zero(dx: usize, du: usize) -> Self {
        Psi::Bilinear { w: Tensor::zeros(&[dx, du]).with_grad() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Psi::Bilinear { .. } => "bilinear",
            Psi::PclAbs(_) => "pcl_abs",
            Psi::LogCosh(_) => "logcosh",
            Psi::Mlp(_) => "mlp",
        }
    }

    pub(crate) fn check_dims(&self, dx: usize, du: usize) -> Result<()> {
        let ok = match self {
            Psi::Bilinear { w } => w.rows() == dx && w.cols() == du,
            Psi::PclAbs(p) | Psi::LogCosh(p) => p.dim() == dx && dx == du,
            Psi::Mlp(net) => net.in_dim() == dx + du && net.out_dim() == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{} psi incompatible with d_x={dx}, d_u={du}", self.name())))
        }
    }

    /// Values for each `(i, j)` pair of rows of `hx` and `hu`.
    pub(crate) fn eval(&self, hx: &Tensor, hu: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        match self {
            Psi::Bilinear { w } => Ok(pairs.iter().map(|&(i, j)| bilinear(w, hx.row(i), hu.row(j))).collect()),
            Psi::PclAbs(p) => Ok(pairs.iter().map(|&(i, j)| elementwise(p, hx.row(i), hu.row(j), neg_abs)).collect()),
            Psi::LogCosh(p) => Ok(pairs.iter().map(|&(i, j)| elementwise(p, hx.row(i), hu.row(j), neg_log_cosh)).collect()),
            Psi::Mlp(net) => Ok(net.forward(&concat_pairs(hx, hu, pairs)?)?.into_data()),
        }
    }

    pub(crate) fn eval_cached(&mut self, hx: &Tensor, hu: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        match self {
            Psi::Mlp(net) => Ok(net.forward_cached(&concat_pairs(hx, hu, pairs)?)?.into_data()),
            _ => self.eval(hx, hu, pairs),
        }
    }

    /// Accumulates parameter gradients and `dhx`, `dhu` for upstream `dr` per pair.
    pub(crate) fn backward(
        &mut self,
        hx: &Tensor,
        hu: &Tensor,
        pairs: &[(usize, usize)],
        dr: &[f64],
        dhx: &mut Tensor,
        dhu: &mut Tensor,
    ) -> Result<()> {
        match self {
            Psi::Bilinear { w } => {
                let (dx, du) = (w.rows(), w.cols());
                let wd = w.data().to_vec();
                let (_, dw) = w.data_and_grad_mut();
                for (&(i, j), &g) in pairs.iter().zip(dr) {
                    if g == 0.0 {
                        continue;
                    }
                    let (x, u) = (hx.row(i), hu.row(j));
                    let mut wu = vec![0.0; dx];
                    let mut xw = vec![0.0; du];
                    for a in 0..dx {
                        for b in 0..du {
                            dw[a * du + b] += g * x[a] * u[b];
                            wu[a] += wd[a * du + b] * u[b];
                            xw[b] += x[a] * wd[a * du + b];
                        }
                    }
                    dhx.row_mut(i).iter_mut().zip(&wu).for_each(|(d, v)| *d += g * v);
                    dhu.row_mut(j).iter_mut().zip(&xw).for_each(|(d, v)| *d += g * v);
                }
            }
            Psi::PclAbs(p) => elementwise_backward(p, hx, hu, pairs, dr, dhx, dhu, neg_abs_prime),
            Psi::LogCosh(p) => elementwise_backward(p, hx, hu, pairs, dr, dhx, dhu, neg_tanh),
            Psi::Mlp(net) => {
                let n = pairs.len();
                let up = Tensor::matrix(n, 1, dr.to_vec())?;
                let dcat = net.backward(&up)?;
                let dx = hx.cols();
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    let row = dcat.row(k);
                    dhx.row_mut(i).iter_mut().zip(&row[..dx]).for_each(|(d, v)| *d += v);
                    dhu.row_mut(j).iter_mut().zip(&row[dx..]).for_each(|(d, v)| *d += v);
                }
            }
        }
        Ok(())
    }
}

fn bilinear(w: &Tensor, x: &[f64], u: &[f64]) -> f64 {
    let du = w.cols();
    let wd = w.data();
    let mut s = 0.0;
    for (a, &xa) in x.iter().enumerate() {
        let row = &wd[a * du..(a + 1) * du];
        s += xa * row.iter().zip(u).map(|(p, q)| p * q).sum::<f64>();
    }
    s
}

fn elementwise(p: &ElementwisePsi, x: &[f64], u: &[f64], f: fn(f64) -> f64) -> f64 {
    let (a1, a2, b, ab, bb) = (p.a1.data(), p.a2.data(), p.b.data(), p.abar.data(), p.bbar.data());
    let mut s = p.c.data()[0];
    for i in 0..x.len() {
        let q = ab[i] * x[i] + bb[i];
        s += f(a1[i] * x[i] + a2[i] * u[i] + b[i]) - q * q;
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn elementwise_backward(
    p: &mut ElementwisePsi,
    hx: &Tensor,
    hu: &Tensor,
    pairs: &[(usize, usize)],
    dr: &[f64],
    dhx: &mut Tensor,
    dhu: &mut Tensor,
    fprime: fn(f64) -> f64,
) {
    let d = p.dim();
    let (a1, a2, b, ab, bb) = (
        p.a1.data().to_vec(),
        p.a2.data().to_vec(),
        p.b.data().to_vec(),
        p.abar.data().to_vec(),
        p.bbar.data().to_vec(),
    );
    let mut g = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut gc = 0.0;
    for (&(ti, tj), &up) in pairs.iter().zip(dr) {
        if up == 0.0 {
            continue;
        }
        gc += up;
        let (x, u) = (hx.row(ti).to_vec(), hu.row(tj).to_vec());
        let dxr = dhx.row_mut(ti);
        for i in 0..d {
            let z = a1[i] * x[i] + a2[i] * u[i] + b[i];
            let fz = up * fprime(z);
            let q2 = -2.0 * up * (ab[i] * x[i] + bb[i]);
            g[0][i] += fz * x[i];
            g[1][i] += fz * u[i];
            g[2][i] += fz;
            g[3][i] += q2 * x[i];
            g[4][i] += q2;
            dxr[i] += fz * a1[i] + q2 * ab[i];
        }
        let dur = dhu.row_mut(tj);
        for i in 0..d {
            let z = a1[i] * x[i] + a2[i] * u[i] + b[i];
            dur[i] += up * fprime(z) * a2[i];
        }
    }
    p.a1.accumulate_grad(&g[0]);
    p.a2.accumulate_grad(&g[1]);
    p.b.accumulate_grad(&g[2]);
    p.abar.accumulate_grad(&g[3]);
    p.bbar.accumulate_grad(&g[4]);
    p.c.accumulate_grad(&[gc]);
}

fn concat_pairs(hx: &Tensor, hu: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let (dx, du) = (hx.cols(), hu.cols());
    let mut data = Vec::with_capacity(pairs.len() * (dx + du));
    for &(i, j) in pairs {
        data.extend_from_slice(hx.row(i));
        data.extend_from_slice(hu.row(j));
    }
    Tensor::matrix(pairs.len(), dx + du, data)
}

impl Parameterized for Psi {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor, bool)) {
        match self {
            Psi::Bilinear { w } => f("w", w, true),
            Psi::PclAbs(p) | Psi::LogCosh(p) => {
                f("a1", &p.a1, true);
                f("a2", &p.a2, true);
                f("b", &p.b, false);
                f("abar", &p.abar, true);
                f("bbar", &p.bbar, false);
                f("c", &p.c, false);
            }
            Psi::Mlp(net) => visit_prefixed(net, "mlp", f),
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor, bool)) {
        match self {
            Psi::Bilinear { w } => f("w", w, true),
            Psi::PclAbs(p) | Psi::LogCosh(p) => {
                f("a1", &mut p.a1, true);
                f("a2", &mut p.a2, true);
                f("b", &mut p.b, false);
                f("abar", &mut p.abar, true);
                f("bbar", &mut p.bbar, false);
                f("c", &mut p.c, false);
            }
            Psi::Mlp(net) => visit_prefixed_mut(net, "mlp", f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cosh_matches_definition() {
        for z in [-3.0, -0.5, 0.0, 0.25, 2.0] {
            assert!((log_cosh(z) - f64::cosh(z).ln()).abs() < 1e-14);
        }
        assert!((log_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }
}
