/// Worst coordinate of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Gradients whose magnitude is below this are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

/// Compares the analytic gradient returned by `loss_fn` at `params` with central
/// differences of step `h`. Relative error per coordinate is
/// `|a − n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn grad_check<F>(mut loss_fn: F, params: &[f64], h: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = loss_fn(params);
    let mut p = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0 };
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss_fn(&p).0;
        p[i] = orig - h;
        let down = loss_fn(&p).0;
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        let rel = (a - numeric).abs() / denom;
        if rel > report.max_rel_error || rel.is_nan() {
            report = GradCheckReport { max_rel_error: rel, worst_index: i, analytic: a, numeric };
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_is_exact() {
        let c = [0.5, -2.0, 3.25];
        let r = grad_check(|p| (p.iter().zip(&c).map(|(a, b)| a * b).sum(), c.to_vec()), &[1.0, 2.0, -1.0], 1e-5);
        assert!(r.max_rel_error < 1e-10, "{r:?}");
    }

    #[test]
    fn wrong_gradient_detected() {
        let r = grad_check(|p| (p[0] * p[0], vec![p[0]]), &[1.5], 1e-5);
        assert!(r.max_rel_error > 0.4);
        assert_eq!(r.worst_index, 0);
    }
}
