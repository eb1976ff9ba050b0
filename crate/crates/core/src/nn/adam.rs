use serde::{Deserialize, Serialize};

use super::{NnError, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment buffers laid out like the parameter tensors they track.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        AdamState {
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            config,
        }
    }
}

/// One bias-corrected Adam step.
pub fn adam_update<P: ParamSet>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
) -> Result<(), NnError> {
    let g = grads.tensors();
    let mut p = params.tensors_mut();
    let same_shape = p.len() == g.len()
        && p.len() == state.m.len()
        && p.iter()
            .zip(&g)
            .zip(&state.m)
            .all(|((a, b), m)| a.len() == b.len() && a.len() == m.len());
    if !same_shape {
        return Err(NnError::Shape("adam: parameter, gradient and state shapes differ".into()));
    }
    if !g.iter().all(|t| t.iter().all(|x| x.is_finite())) {
        return Err(NnError::NonFinite("adam gradient"));
    }

    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.step as i32);
    let bc2 = 1.0 - beta2.powi(state.step as i32);
    for (((pt, gt), mt), vt) in p.iter_mut().zip(&g).zip(&mut state.m).zip(&mut state.v) {
        for k in 0..pt.len() {
            let gk = gt[k];
            mt[k] = beta1 * mt[k] + (1.0 - beta1) * gk;
            vt[k] = beta2 * vt[k] + (1.0 - beta2) * gk * gk;
            let m_hat = mt[k] / bc1;
            let v_hat = vt[k] / bc2;
            pt[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_noop() {
        let mut w = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(&w, AdamConfig::default());
        adam_update(&mut w, &vec![0.0; 3], &mut s).unwrap();
        assert_eq!(w, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_is_bounded_by_lr() {
        let cfg = AdamConfig::default();
        for g in [1e-6, 0.3, 7.0, -250.0] {
            let mut w = vec![0.0];
            let mut s = AdamState::new(&w, cfg);
            adam_update(&mut w, &vec![g], &mut s).unwrap();
            assert!(w[0].abs() <= cfg.lr * (1.0 + 1e-6));
            assert!(w[0].signum() == -g.signum());
        }
    }

    #[test]
    fn quadratic_descent_matches_scalar_reference() {
        // f(w) = w², gradient 2w
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut w = vec![1.0];
        let mut s = AdamState::new(&w, cfg);

        let (mut rw, mut rm, mut rv) = (1.0f64, 0.0f64, 0.0f64);
        let mut prev = w[0];
        for t in 1..=10 {
            let g = vec![2.0 * w[0]];
            adam_update(&mut w, &g, &mut s).unwrap();

            let rg = 2.0 * rw;
            rm = 0.9 * rm + 0.1 * rg;
            rv = 0.999 * rv + 0.001 * rg * rg;
            let mh = rm / (1.0 - 0.9f64.powi(t));
            let vh = rv / (1.0 - 0.999f64.powi(t));
            rw -= 0.1 * mh / (vh.sqrt() + 1e-8);

            approx::assert_relative_eq!(w[0], rw, max_relative = 1e-14);
            assert!(w[0] < prev && w[0] > 0.0);
            prev = w[0];
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut w = vec![1.0, 2.0];
        let mut s = AdamState::new(&w, AdamConfig::default());
        assert!(adam_update(&mut w, &vec![1.0], &mut s).is_err());
        assert!(adam_update(&mut w, &vec![f64::NAN, 0.0], &mut s).is_err());
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut w = vec![0.5, -0.25];
            let mut s = AdamState::new(&w, AdamConfig::default());
            for k in 0..5 {
                adam_update(&mut w, &vec![k as f64 * 0.1, -0.3], &mut s).unwrap();
            }
            (w, s)
        };
        assert_eq!(run(), run());
    }
}
