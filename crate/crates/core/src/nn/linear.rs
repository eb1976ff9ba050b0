use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, check_len, Matrix, NnError, ParamSet};

/// Affine map `W·x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        LinearParams {
            w: Matrix::zeros(output, input),
            b: vec![0.0; output],
        }
    }

    pub fn init<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let w = Matrix::uniform_init(output, input, rng);
        let bound = 1.0 / (input as f64).sqrt();
        let b = (0..output).map(|_| rng.random_range(-bound..=bound)).collect();
        LinearParams { w, b }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols
    }

    pub fn output_size(&self) -> usize {
        self.w.rows
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.w.data.len() != self.w.rows * self.w.cols || self.b.len() != self.w.rows {
            return Err(NnError::Shape(format!(
                "linear layer {}x{} with bias of length {}",
                self.w.rows,
                self.w.cols,
                self.b.len()
            )));
        }
        Ok(())
    }
}

impl ParamSet for LinearParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.w.data, &self.b]
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w.data, &mut self.b]
    }
}

pub fn linear_forward(params: &LinearParams, x: &[f64]) -> Result<Vec<f64>, NnError> {
    params.validate()?;
    check_len(x, params.input_size(), "linear input")?;
    check_finite(x, "linear input")?;
    Ok(linear_forward_unchecked(params, x))
}

pub(crate) fn linear_forward_unchecked(params: &LinearParams, x: &[f64]) -> Vec<f64> {
    let mut out = params.b.clone();
    params.w.matvec_split_acc(x, &[], &mut out);
    out
}

/// Accumulates `dy·xᵀ` into `grads.w` and `dy` into `grads.b`; returns `Wᵀ·dy`.
pub fn linear_backward(
    params: &LinearParams,
    x: &[f64],
    dy: &[f64],
    grads: &mut LinearParams,
) -> Vec<f64> {
    grads.w.add_outer_split(dy, x, &[]);
    for (g, d) in grads.b.iter_mut().zip(dy) {
        *g += d;
    }
    let mut dx = vec![0.0; x.len()];
    params.w.matvec_t_split_acc(dy, &mut dx, &mut []);
    dx
}
