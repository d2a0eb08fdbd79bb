use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const SUBSAMPLE: usize = 5000;
const N_FEATURES: usize = 300;
const RIDGE: f64 = 1e-3;
const SEED: u64 = 0x6e75;

/// Mean out-of-sample R² (clipped to `[0, 1]`) of predicting each feature column
/// from `s` and from `n`. Kernel ridge regression with a Gaussian kernel, approximated
/// by random Fourier features; bandwidth from the median heuristic.
pub fn nuisance_independence_score(features: &Tensor, s: &Tensor, n: &Tensor) -> Result<(f64, f64)> {
    let t = features.rows();
    for (name, m) in [("s", s), ("n", n)] {
        if m.rows() != t {
            return Err(Error::shape(&format!("nuisance score rows of {name}"), t, m.rows()));
        }
    }
    if t < 10 {
        return Err(Error::Config(format!("nuisance score needs at least 10 rows, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut idx: Vec<usize> = (0..t).collect();
    idx.shuffle(&mut rng);
    idx.truncate(SUBSAMPLE);
    let split = idx.len() * 4 / 5;
    let y = standardize(&features.select_rows(&idx));
    let dep_s = kernel_r2(&standardize(&s.select_rows(&idx)), &y, split, &mut rng)?;
    let dep_n = kernel_r2(&standardize(&n.select_rows(&idx)), &y, split, &mut rng)?;
    Ok((dep_s, dep_n))
}

fn standardize(x: &Tensor) -> DMatrix<f64> {
    let (t, d) = (x.rows(), x.cols());
    let mut m = DMatrix::from_row_slice(t, d, x.data());
    for mut c in m.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let sd = (c.norm_squared() / t as f64).sqrt();
        if sd > 0.0 {
            c /= sd;
        }
    }
    m
}

fn median_distance(x: &DMatrix<f64>) -> f64 {
    let k = x.nrows().min(300);
    let mut d = Vec::with_capacity(k * k / 2);
    for i in 0..k {
        for j in 0..i {
            d.push((x.row(i) - x.row(j)).norm());
        }
    }
    d.sort_by(f64::total_cmp);
    let med = d.get(d.len() / 2).copied().unwrap_or(1.0);
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

fn kernel_r2(x: &DMatrix<f64>, y: &DMatrix<f64>, split: usize, rng: &mut impl Rng) -> Result<f64> {
    let (t, d) = (x.nrows(), x.ncols());
    let sigma = median_distance(x);
    let omega = DMatrix::from_fn(d, N_FEATURES, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z / sigma
    });
    let phase = DVector::from_fn(N_FEATURES, |_, _| rng.random_range(0.0..std::f64::consts::TAU));
    let scale = (2.0 / N_FEATURES as f64).sqrt();
    let mut phi = x * &omega;
    for mut row in phi.row_iter_mut() {
        for (v, b) in row.iter_mut().zip(phase.iter()) {
            *v = scale * (*v + b).cos();
        }
    }
    let (ptr, pte) = (phi.rows(0, split), phi.rows(split, t - split));
    let (ytr, yte) = (y.rows(0, split), y.rows(split, t - split));
    let fmean = ptr.row_mean();
    let ymean = ytr.row_mean();
    let center = |m: nalgebra::DMatrixView<f64>, mean: &nalgebra::RowDVector<f64>| {
        let mut m = m.into_owned();
        for mut r in m.row_iter_mut() {
            r -= mean;
        }
        m
    };
    let (pc, yc) = (center(ptr, &fmean), center(ytr, &ymean));
    let gram = pc.transpose() * &pc + DMatrix::identity(N_FEATURES, N_FEATURES) * (RIDGE * split as f64);
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("ridge system not positive definite".into()))?
        .solve(&(pc.transpose() * yc));
    let pred = center(pte, &fmean) * beta;
    let mut total = 0.0;
    for k in 0..y.ncols() {
        let obs = yte.column(k);
        let mu = obs.mean();
        let ss_tot: f64 = obs.iter().map(|v| (v - mu).powi(2)).sum();
        let ss_res: f64 = obs.iter().zip(pred.column(k).iter()).map(|(o, p)| (o - p - ymean[k]).powi(2)).sum();
        let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
        total += r2.clamp(0.0, 1.0);
    }
    Ok(total / y.ncols() as f64)
}

fn double_centered(x: &Tensor) -> Vec<f64> {
    let t = x.rows();
    let mut d = vec![0.0; t * t];
    for i in 0..t {
        for j in 0..i {
            let v = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            d[i * t + j] = v;
            d[j * t + i] = v;
        }
    }
    let row_mean: Vec<f64> = (0..t).map(|i| d[i * t..(i + 1) * t].iter().sum::<f64>() / t as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / t as f64;
    for i in 0..t {
        for j in 0..t {
            d[i * t + j] += grand - row_mean[i] - row_mean[j];
        }
    }
    d
}

/// Sample distance correlation between the rows of `a` and `b`, in `[0, 1]`.
pub fn distance_correlation(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.rows(), b.rows(), "distance_correlation needs equal row counts");
    let (da, db) = (double_centered(a), double_centered(b));
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).sum::<f64>();
    let (ab, aa, bb) = (dot(&da, &db), dot(&da, &da), dot(&db, &db));
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    (ab.max(0.0) / (aa * bb).sqrt()).sqrt()
}
