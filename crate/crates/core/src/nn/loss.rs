use super::{check_finite, NnError};

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if pred.is_empty() {
        return Err(NnError::Empty("mse_loss"));
    }
    if pred.len() != target.len() {
        return Err(NnError::Shape(format!(
            "mse_loss: prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    check_finite(pred, "mse prediction")?;
    check_finite(target, "mse target")?;
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[class]` and its gradient `softmax - one_hot`.
pub fn cross_entropy_loss(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>), NnError> {
    if logits.len() < 2 {
        return Err(NnError::Shape(format!(
            "cross_entropy_loss needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    if class >= logits.len() {
        return Err(NnError::ClassIndex {
            index: class,
            classes: logits.len(),
        });
    }
    check_finite(logits, "logits")?;
    // ln(1 + rest) keeps small losses accurate to their own magnitude.
    let top = (0..logits.len()).fold(0, |b, i| if logits[i] > logits[b] { i } else { b });
    let max = logits[top];
    let rest: f64 = (0..logits.len())
        .filter(|&i| i != top)
        .map(|i| (logits[i] - max).exp())
        .sum();
    let loss = rest.ln_1p() + (max - logits[class]);
    let mut grad = softmax(logits);
    grad[class] = -(0..grad.len()).filter(|&i| i != class).map(|i| grad[i]).sum::<f64>();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap().0, 0.0);
        assert_eq!(mse_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap().0, 0.5);
        assert!(matches!(mse_loss(&[1.0], &[1.0, 2.0]), Err(NnError::Shape(_))));
        assert_eq!(mse_loss(&[], &[]), Err(NnError::Empty("mse_loss")));
        assert!(mse_loss(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn mse_gradient_matches_differences() {
        let p = [0.3, -1.2, 2.5, 0.0];
        let t = [0.1, 0.4, 2.0, -0.7];
        let (_, g) = mse_loss(&p, &t).unwrap();
        let n = central_diff(|x| mse_loss(x, &t).unwrap().0, &p, 1e-5);
        for (a, b) in g.iter().zip(&n) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let (l, _) = cross_entropy_loss(&[0.0, 0.0], 0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, g) = cross_entropy_loss(&[1000.0, 0.0], 0).unwrap();
        assert!(l.is_finite() && l.abs() < 1e-12);
        assert!(g.iter().all(|v| v.is_finite()));
        assert_eq!(
            cross_entropy_loss(&[0.0, 1.0], 2),
            Err(NnError::ClassIndex { index: 2, classes: 2 })
        );
        assert!(cross_entropy_loss(&[0.0], 0).is_err());
    }

    #[test]
    fn cross_entropy_gradient_matches_differences() {
        let z = [0.4, -1.1, 2.2];
        for class in 0..3 {
            let (_, g) = cross_entropy_loss(&z, class).unwrap();
            let n = central_diff(|x| cross_entropy_loss(x, class).unwrap().0, &z, 1e-5);
            for (a, b) in g.iter().zip(&n) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn softmax_normalized(z in prop::collection::vec(-50.0f64..50.0, 2..10)) {
            let p = softmax(&z);
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
