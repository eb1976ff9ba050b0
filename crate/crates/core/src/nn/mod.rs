//! Small dense neural-network engine: matrices, linear layers, an LSTM
//! cell with hand-written backward passes, losses, Adam and a
//! finite-difference gradient checker.
//!
//! All math is `f64`. Forward passes that feed training return a cache
//! which the matching backward function consumes, so a backward pass
//! cannot be requested without its forward evaluation.

mod adam;
mod gradcheck;
mod linear;
mod loss;
mod lstm;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use linear::{linear_backward, linear_forward, LinearParams};
pub use loss::{cross_entropy_loss, mse_loss, softmax};
pub use lstm::{lstm_backward, lstm_step, LstmCache, LstmCellParams, LstmState};

pub(crate) use linear::linear_forward_unchecked;
pub(crate) use lstm::lstm_forward;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("class index {index} out of range for {classes} classes")]
    ClassIndex { index: usize, classes: usize },
}

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<(), NnError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFinite(what))
    }
}

pub(crate) fn check_len(values: &[f64], expected: usize, what: &str) -> Result<(), NnError> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(NnError::Shape(format!(
            "{what}: expected length {expected}, got {}",
            values.len()
        )))
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::Shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data, "matrix")?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Uniform in `[-1/sqrt(cols), 1/sqrt(cols)]`.
    pub fn uniform_init<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        Matrix {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self · [a; b]` where `a.len() + b.len() == cols`.
    #[inline]
    pub(crate) fn matvec_split_acc(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        debug_assert_eq!(a.len() + b.len(), self.cols);
        let na = a.len();
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            *o += dot(&row[..na], a) + dot(&row[na..], b);
        }
    }

    /// `out_a += selfᵀ·y[..]` restricted to the first columns, `out_b` the rest.
    #[inline]
    pub(crate) fn matvec_t_split_acc(&self, y: &[f64], out_a: &mut [f64], out_b: &mut [f64]) {
        let na = out_a.len();
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let row = self.row(r);
            axpy(yr, &row[..na], out_a);
            axpy(yr, &row[na..], out_b);
        }
    }

    /// `self += y · [a; b]ᵀ`.
    #[inline]
    pub(crate) fn add_outer_split(&mut self, y: &[f64], a: &[f64], b: &[f64]) {
        let na = a.len();
        let cols = self.cols;
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            axpy(yr, a, &mut row[..na]);
            axpy(yr, b, &mut row[na..]);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A fixed, ordered collection of parameter tensors. Gradients use the same
/// type as the parameters they belong to.
pub trait ParamSet: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
    }

    fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Rescales so the global norm is at most `max_norm`; returns the norm
    /// before clipping.
    fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.global_norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
        n
    }
}

impl ParamSet for Vec<f64> {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}
