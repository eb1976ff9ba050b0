use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, check_len, sigmoid, Matrix, NnError, ParamSet};

/// Weights of one LSTM cell. Every gate matrix acts on the concatenation
/// `[h_{t-1}, x_t]`, so its shape is `(hidden, hidden + input)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w_i: Matrix,
    pub w_f: Matrix,
    pub w_o: Matrix,
    pub w_c: Matrix,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Everything the backward pass of one step needs.
#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = || Matrix::zeros(hidden, hidden + input);
        LstmCellParams {
            w_i: m(),
            w_f: m(),
            w_o: m(),
            w_c: m(),
            b_i: vec![0.0; hidden],
            b_f: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases except the forget
    /// gate, which starts at 1.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let cols = hidden + input;
        LstmCellParams {
            w_i: Matrix::uniform_init(hidden, cols, rng),
            w_f: Matrix::uniform_init(hidden, cols, rng),
            w_o: Matrix::uniform_init(hidden, cols, rng),
            w_c: Matrix::uniform_init(hidden, cols, rng),
            b_i: vec![0.0; hidden],
            b_f: vec![1.0; hidden],
            b_o: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_i.rows
    }

    pub fn input_size(&self) -> usize {
        self.w_i.cols - self.w_i.rows
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let (r, c) = (self.w_i.rows, self.w_i.cols);
        let ok = c >= r
            && [&self.w_i, &self.w_f, &self.w_o, &self.w_c]
                .iter()
                .all(|m| m.rows == r && m.cols == c && m.data.len() == r * c)
            && [&self.b_i, &self.b_f, &self.b_o, &self.b_c]
                .iter()
                .all(|b| b.len() == r);
        if ok {
            Ok(())
        } else {
            Err(NnError::Shape("inconsistent LSTM cell parameter shapes".into()))
        }
    }
}

impl ParamSet for LstmCellParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            &self.w_i.data,
            &self.w_f.data,
            &self.w_o.data,
            &self.w_c.data,
            &self.b_i,
            &self.b_f,
            &self.b_o,
            &self.b_c,
        ]
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w_i.data,
            &mut self.w_f.data,
            &mut self.w_o.data,
            &mut self.w_c.data,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_c,
        ]
    }
}

/// One LSTM step with shape and finiteness checks.
pub fn lstm_step(
    params: &LstmCellParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<LstmState, NnError> {
    params.validate()?;
    let hidden = params.hidden_size();
    check_len(x, params.input_size(), "lstm input")?;
    check_len(&prev.h, hidden, "lstm hidden state")?;
    check_len(&prev.c, hidden, "lstm cell state")?;
    check_finite(x, "lstm input")?;
    check_finite(&prev.h, "lstm hidden state")?;
    check_finite(&prev.c, "lstm cell state")?;
    Ok(lstm_forward(params, x, prev).0)
}

pub(crate) fn lstm_forward(
    params: &LstmCellParams,
    x: &[f64],
    prev: &LstmState,
) -> (LstmState, LstmCache) {
    let gate = |w: &Matrix, b: &[f64]| {
        let mut z = b.to_vec();
        w.matvec_split_acc(&prev.h, x, &mut z);
        z
    };
    let mut i = gate(&params.w_i, &params.b_i);
    let mut f = gate(&params.w_f, &params.b_f);
    let mut o = gate(&params.w_o, &params.b_o);
    let mut g = gate(&params.w_c, &params.b_c);
    for v in i.iter_mut().chain(f.iter_mut()).chain(o.iter_mut()) {
        *v = sigmoid(*v);
    }
    for v in g.iter_mut() {
        *v = v.tanh();
    }
    let hidden = i.len();
    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    for k in 0..hidden {
        c[k] = f[k] * prev.c[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }
    let cache = LstmCache {
        x: x.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        i,
        f,
        o,
        g,
        tanh_c,
    };
    (LstmState { h, c }, cache)
}

/// Backpropagates `(dL/dh_t, dL/dc_t)` through one step. Parameter
/// gradients are accumulated into `grads`; returns
/// `(dL/dh_{t-1}, dL/dc_{t-1}, dL/dx_t)`.
pub fn lstm_backward(
    params: &LstmCellParams,
    cache: &LstmCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmCellParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hidden = cache.i.len();
    let mut dz_i = vec![0.0; hidden];
    let mut dz_f = vec![0.0; hidden];
    let mut dz_o = vec![0.0; hidden];
    let mut dz_g = vec![0.0; hidden];
    let mut dc_prev = vec![0.0; hidden];
    for k in 0..hidden {
        let (i, f, o, g, tc) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        dz_o[k] = dh[k] * tc * o * (1.0 - o);
        dz_i[k] = dct * g * i * (1.0 - i);
        dz_g[k] = dct * i * (1.0 - g * g);
        dz_f[k] = dct * cache.c_prev[k] * f * (1.0 - f);
        dc_prev[k] = dct * f;
    }

    let mut dh_prev = vec![0.0; hidden];
    let mut dx = vec![0.0; cache.x.len()];
    for (w, gw, gb, dz) in [
        (&params.w_i, &mut grads.w_i, &mut grads.b_i, &dz_i),
        (&params.w_f, &mut grads.w_f, &mut grads.b_f, &dz_f),
        (&params.w_o, &mut grads.w_o, &mut grads.b_o, &dz_o),
        (&params.w_c, &mut grads.w_c, &mut grads.b_c, &dz_g),
    ] {
        gw.add_outer_split(dz, &cache.h_prev, &cache.x);
        for (b, d) in gb.iter_mut().zip(dz.iter()) {
            *b += d;
        }
        w.matvec_t_split_acc(dz, &mut dh_prev, &mut dx);
    }
    (dh_prev, dc_prev, dx)
}
