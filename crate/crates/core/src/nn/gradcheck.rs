use super::ParamSet;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares `analytic` against central differences of `loss` at `params`,
/// coordinate by coordinate. The error per coordinate is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<P, F>(loss: F, params: &P, analytic: &P, step: f64) -> GradCheckReport
where
    P: ParamSet,
    F: Fn(&P) -> f64,
{
    let mut probe = params.clone();
    let analytic_flat: Vec<f64> = analytic.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let mut flat = 0;
    for (ti, &len) in shapes.iter().enumerate() {
        for k in 0..len {
            let orig = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = orig + step;
            let plus = loss(&probe);
            probe.tensors_mut()[ti][k] = orig - step;
            let minus = loss(&probe);
            probe.tensors_mut()[ti][k] = orig;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic_flat[flat];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = rel;
                report.worst_index = flat;
                report.analytic = a;
                report.numeric = numeric;
            }
            report.checked += 1;
            flat += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_corrupted_gradient() {
        let f = |w: &Vec<f64>| w[0] * w[0] + 3.0 * w[1];
        let w = vec![0.7, -0.2];
        let good = vec![1.4, 3.0];
        assert!(grad_check(f, &w, &good, 1e-5).max_rel_error < 1e-8);
        let bad = vec![1.4, 3.1];
        let r = grad_check(f, &w, &bad, 1e-5);
        assert!(r.max_rel_error > 1e-2);
        assert_eq!(r.worst_index, 1);
    }
}
