use log::warn;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// `|corr(feature_i, source_j)|`, row-major `D×D`.
    pub abs_corr: Vec<f64>,
    pub dim: usize,
    /// `assignment[i]` is the source matched to feature `i`.
    pub assignment: Vec<usize>,
    pub mean_abs_corr: f64,
}

/// Pearson correlation; zero when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials). Returns `assignment[row] = column`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    const INF: f64 = f64::INFINITY;
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Mean |Pearson| between features and sources along the best one-to-one matching.
pub fn mean_abs_correlation(features: &Tensor, sources: &Tensor) -> Result<CorrelationReport> {
    if features.rows() != sources.rows() {
        return Err(Error::shape("mean_abs_correlation rows", sources.rows(), features.rows()));
    }
    let d = features.cols();
    if sources.cols() != d {
        return Err(Error::shape("mean_abs_correlation columns", sources.cols(), d));
    }
    if d == 0 || d > 64 {
        return Err(Error::Config(format!("dimension must be in 1..=64, got {d}")));
    }
    let fcols: Vec<Vec<f64>> = (0..d).map(|i| features.column(i)).collect();
    let scols: Vec<Vec<f64>> = (0..d).map(|j| sources.column(j)).collect();
    for (name, cols) in [("feature", &fcols), ("source", &scols)] {
        for (i, c) in cols.iter().enumerate() {
            if c.iter().all(|&v| v == c[0]) {
                warn!("{name} column {i} has zero variance; its correlations are set to 0");
            }
        }
    }
    let mut abs_corr = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            abs_corr[i * d + j] = pearson(&fcols[i], &scols[j]).abs();
        }
    }
    let cost: Vec<f64> = abs_corr.iter().map(|c| -c).collect();
    let assignment = hungarian(&cost, d);
    let mean_abs_corr = (0..d).map(|i| abs_corr[i * d + assignment[i]]).sum::<f64>() / d as f64;
    Ok(CorrelationReport { abs_corr, dim: d, assignment, mean_abs_corr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == n {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row * n + j] + rec(cost, n, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, n, 0, &mut vec![false; n])
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = hungarian(&cost, n);
                let mut seen = a.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let total: f64 = (0..n).map(|i| cost[i * n + a[i]]).sum();
                assert!((total - brute_force(&cost, n)).abs() < 1e-12);
            }
        }
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identical_is_one() {
        let s = random(500, 4, 1);
        let r = mean_abs_correlation(&s, &s).unwrap();
        assert!((r.mean_abs_corr - 1.0).abs() < 1e-12);
        assert_eq!(r.assignment, vec![0, 1, 2, 3]);
    }

    #[test]
    fn permuted_and_flipped_is_one() {
        let s = random(500, 4, 2);
        let perm = [2, 0, 3, 1];
        let mut f = Tensor::zeros(&[500, 4]);
        for t in 0..500 {
            for (i, &p) in perm.iter().enumerate() {
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                f.set(t, i, sign * s.get(t, p));
            }
        }
        let r = mean_abs_correlation(&f, &s).unwrap();
        assert!((r.mean_abs_corr - 1.0).abs() < 1e-12);
        assert_eq!(r.assignment, perm.to_vec());
    }

    #[test]
    fn independent_is_small() {
        let r = mean_abs_correlation(&random(10_000, 10, 3), &random(10_000, 10, 4)).unwrap();
        assert!(r.mean_abs_corr < 0.05, "{}", r.mean_abs_corr);
    }

    #[test]
    fn constant_column_reads_zero() {
        let s = random(100, 2, 5);
        let mut f = s.clone();
        for t in 0..100 {
            f.set(t, 1, 3.0);
        }
        let r = mean_abs_correlation(&f, &s).unwrap();
        assert_eq!(r.abs_corr[2], 0.0);
        assert_eq!(r.abs_corr[3], 0.0);
    }
}
