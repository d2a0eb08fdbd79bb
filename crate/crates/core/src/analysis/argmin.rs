use crate::error::{Error, Result};

const SCAN: usize = 41;
const GOLDEN_TOL: f64 = 1e-7;
const THETA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ArgminReport {
    /// The lowest local minimum found.
    pub theta: f64,
    pub value: f64,
    /// Every local minimum, ascending in θ. More than one means the objective
    /// was not unimodal on the search interval.
    pub local_minima: Vec<f64>,
}

impl ArgminReport {
    pub fn unimodal(&self) -> bool {
        self.local_minima.len() == 1
    }
}

/// Minimizes a scalar function given as `θ ↦ (value, derivative)` on `[lo, hi]`:
/// grid scan for brackets, golden section inside each, then Newton on the
/// derivative with a finite-difference second derivative.
pub fn population_argmin_1d(f: impl Fn(f64) -> Result<(f64, f64)>, lo: f64, hi: f64) -> Result<ArgminReport> {
    if !(lo < hi) {
        return Err(Error::Config(format!("empty search interval [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (SCAN - 1) as f64;
    let grid: Vec<f64> = (0..SCAN).map(|i| lo + step * i as f64).collect();
    let vals = grid.iter().map(|&t| f(t).map(|v| v.0)).collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for i in 0..SCAN {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == SCAN { f64::INFINITY } else { vals[i + 1] };
        if vals[i] <= left && vals[i] < right {
            brackets.push((grid[i.saturating_sub(1)], grid[(i + 1).min(SCAN - 1)]));
        }
    }
    if brackets.is_empty() {
        return Err(Error::Numerical("no local minimum found on the scan grid".into()));
    }
    let mut minima = Vec::new();
    for (a, b) in brackets {
        let t = newton_polish(&f, golden(&f, a, b)?, a, b)?;
        minima.push((t, f(t)?.0));
    }
    let best = minima.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty");
    Ok(ArgminReport { theta: best.0, value: best.1, local_minima: minima.iter().map(|m| m.0).collect() })
}

fn golden(f: &impl Fn(f64) -> Result<(f64, f64)>, mut a: f64, mut b: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?.0, f(d)?.0);
    while (b - a).abs() > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?.0;
        }
    }
    Ok(0.5 * (a + b))
}

fn newton_polish(f: &impl Fn(f64) -> Result<(f64, f64)>, mut t: f64, a: f64, b: f64) -> Result<f64> {
    let h = 1e-5;
    for _ in 0..20 {
        let d = f(t)?.1;
        let curv = (f(t + h)?.1 - f(t - h)?.1) / (2.0 * h);
        if !(curv > 0.0) {
            break;
        }
        let next = (t - d / curv).clamp(a, b);
        let moved = (next - t).abs();
        t = next;
        if moved < THETA_TOL {
            break;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = population_argmin_1d(|t| Ok(((t - 0.3).powi(2), 2.0 * (t - 0.3))), -1.0, 1.0).unwrap();
        assert!((r.theta - 0.3).abs() < 1e-12);
        assert!(r.unimodal());
    }

    #[test]
    fn reports_every_local_minimum() {
        // minima near ±1, the one at −1 slightly lower
        let f = |t: f64| Ok(((t * t - 1.0).powi(2) + 0.1 * t, 4.0 * t * (t * t - 1.0) + 0.1));
        let r = population_argmin_1d(f, -2.0, 2.0).unwrap();
        assert_eq!(r.local_minima.len(), 2);
        assert!(r.theta < 0.0);
        for m in &r.local_minima {
            assert!(f(*m).unwrap().1.abs() < 1e-9);
        }
    }
}
