use crate::error::{Error, Result};
use crate::nn::{visit_prefixed, visit_prefixed_mut, FeedforwardNet, Parameterized};
use crate::tensor::Tensor;

/// The additive terms `a(h_x)` and `b(h_u)`.
#[derive(Debug, Clone)]
pub enum Head {
    Zero,
    Net(FeedforwardNet),
    /// `Σ_i lin_i h_i + quad_i h_i² + bias`; enough to make a bilinear model
    /// exact for jointly Gaussian pairs.
    Quadratic { lin: Tensor, quad: Tensor, bias: Tensor },
}

impl Head {
    pub fn quadratic(d: usize) -> Self {
        Head::Quadratic {
            lin: Tensor::zeros(&[d]).with_grad(),
            quad: Tensor::zeros(&[d]).with_grad(),
            bias: Tensor::zeros(&[1]).with_grad(),
        }
    }

    pub(crate) fn check_dim(&self, d: usize, name: &str) -> Result<()> {
        let ok = match self {
            Head::Zero => true,
            Head::Net(n) => n.in_dim() == d && n.out_dim() == 1,
            Head::Quadratic { lin, quad, .. } => lin.len() == d && quad.len() == d,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("head {name} does not map {d} columns to a scalar")))
        }
    }

    pub(crate) fn eval(&self, h: &Tensor) -> Result<Vec<f64>> {
        Ok(match self {
            Head::Zero => vec![0.0; h.rows()],
            Head::Net(n) => n.forward(h)?.into_data(),
            Head::Quadratic { lin, quad, bias } => quadratic(lin, quad, bias, h),
        })
    }

    pub(crate) fn eval_cached(&mut self, h: &Tensor) -> Result<Vec<f64>> {
        match self {
            Head::Net(n) => Ok(n.forward_cached(h)?.into_data()),
            _ => self.eval(h),
        }
    }

    /// Accumulates parameter gradients and adds `∂/∂h` into `dh`.
    pub(crate) fn backward(&mut self, h: &Tensor, dout: &[f64], dh: &mut Tensor) -> Result<()> {
        match self {
            Head::Zero => {}
            Head::Net(n) => {
                let g = n.backward(&Tensor::matrix(dout.len(), 1, dout.to_vec())?)?;
                dh.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += b);
            }
            Head::Quadratic { lin, quad, bias } => {
                let d = lin.len();
                let (l, q) = (lin.data().to_vec(), quad.data().to_vec());
                let mut gl = vec![0.0; d];
                let mut gq = vec![0.0; d];
                let mut gb = 0.0;
                for (t, &g) in dout.iter().enumerate() {
                    gb += g;
                    let row = h.row(t).to_vec();
                    let dr = dh.row_mut(t);
                    for i in 0..d {
                        gl[i] += g * row[i];
                        gq[i] += g * row[i] * row[i];
                        dr[i] += g * (l[i] + 2.0 * q[i] * row[i]);
                    }
                }
                lin.accumulate_grad(&gl);
                quad.accumulate_grad(&gq);
                bias.accumulate_grad(&[gb]);
            }
        }
        Ok(())
    }
}

fn quadratic(lin: &Tensor, quad: &Tensor, bias: &Tensor, h: &Tensor) -> Vec<f64> {
    (0..h.rows())
        .map(|t| {
            let row = h.row(t);
            bias.data()[0]
                + row
                    .iter()
                    .zip(lin.data().iter().zip(quad.data()))
                    .map(|(&v, (&l, &q))| l * v + q * v * v)
                    .sum::<f64>()
        })
        .collect()
}

impl Parameterized for Head {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Tensor, bool)) {
        match self {
            Head::Zero => {}
            Head::Net(n) => visit_prefixed(n, "net", f),
            Head::Quadratic { lin, quad, bias } => {
                f("lin", lin, true);
                f("quad", quad, true);
                f("bias", bias, false);
            }
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor, bool)) {
        match self {
            Head::Zero => {}
            Head::Net(n) => visit_prefixed_mut(n, "net", f),
            Head::Quadratic { lin, quad, bias } => {
                f("lin", lin, true);
                f("quad", quad, true);
                f("bias", bias, false);
            }
        }
    }
}
