//! Packed sequence-to-sequence pose forecaster.
//!
//! Every `n_p` consecutive pose vectors are concatenated into one package
//! (the last one zero-padded), an LSTM encoder folds the observed packages
//! into a state, and an LSTM decoder seeded with that state and the last
//! observed package emits future packages autoregressively through a
//! linear projection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::nn::{
    adam_update, grad_check, linear_backward, linear_forward_unchecked, lstm_backward, lstm_forward,
    AdamConfig, AdamState, GradCheckReport, LinearParams, LstmCache, LstmCellParams, LstmState, NnError, ParamSet,
};
use crate::vectorize::{PoseVector, PoseVectorSequence, POSE_DIM};

/// Bone sub-vectors shorter than this are treated as absent when a
/// forecast is renormalized for classification.
pub const RENORM_MIN_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub t_obs: usize,
    pub t_pred: usize,
    pub n_p: usize,
    pub hidden_size: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            t_obs: 25,
            t_pred: 50,
            n_p: 5,
            hidden_size: 256,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_obs == 0 || self.t_pred == 0 || self.n_p == 0 || self.hidden_size == 0 {
            return Err(Error::Config(format!(
                "t_obs, t_pred, n_p and hidden_size must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn package_width(&self) -> usize {
        POSE_DIM * self.n_p
    }

    pub fn decode_steps(&self) -> usize {
        self.t_pred.div_ceil(self.n_p)
    }

    pub fn window_len(&self) -> usize {
        self.t_obs + self.t_pred
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackedSequence {
    pub packages: Vec<Vec<f64>>,
    pub real_count: usize,
}

pub fn pack(vectors: &[PoseVector], n_p: usize) -> Result<PackedSequence> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("cannot pack an empty sequence".into()));
    }
    if n_p == 0 {
        return Err(Error::Config("n_p must be positive".into()));
    }
    let packages = vectors
        .chunks(n_p)
        .map(|chunk| {
            let mut pkg = Vec::with_capacity(POSE_DIM * n_p);
            for v in chunk {
                pkg.extend_from_slice(&v.0);
            }
            pkg.resize(POSE_DIM * n_p, 0.0);
            pkg
        })
        .collect();
    Ok(PackedSequence {
        packages,
        real_count: vectors.len(),
    })
}

pub fn unpack(packed: &PackedSequence, n_p: usize, expected_count: usize) -> Result<Vec<PoseVector>> {
    if n_p == 0 {
        return Err(Error::Config("n_p must be positive".into()));
    }
    let capacity = packed.packages.len() * n_p;
    if expected_count > capacity {
        return Err(Error::InvalidInput(format!(
            "cannot unpack {expected_count} vectors from {capacity} slots"
        )));
    }
    let mut out = Vec::with_capacity(expected_count);
    for pkg in &packed.packages {
        if pkg.len() != POSE_DIM * n_p {
            return Err(NnError::Shape(format!(
                "package of length {} for n_p = {n_p}",
                pkg.len()
            ))
            .into());
        }
        for chunk in pkg.chunks_exact(POSE_DIM) {
            if out.len() == expected_count {
                return Ok(out);
            }
            out.push(PoseVector::from_slice(chunk)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub encoder: LstmCellParams,
    pub decoder: LstmCellParams,
    pub out_proj: LinearParams,
}

impl PredictorParams {
    pub fn init(config: &PredictorConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = config.package_width();
        PredictorParams {
            encoder: LstmCellParams::init(width, config.hidden_size, &mut rng),
            decoder: LstmCellParams::init(width, config.hidden_size, &mut rng),
            out_proj: LinearParams::init(config.hidden_size, width, &mut rng),
        }
    }

    pub fn zeros(config: &PredictorConfig) -> Self {
        let width = config.package_width();
        PredictorParams {
            encoder: LstmCellParams::zeros(width, config.hidden_size),
            decoder: LstmCellParams::zeros(width, config.hidden_size),
            out_proj: LinearParams::zeros(config.hidden_size, width),
        }
    }

    /// Checks that the weights fit `config`.
    pub fn check_config(&self, config: &PredictorConfig) -> Result<()> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        self.out_proj.validate()?;
        let width = config.package_width();
        let h = config.hidden_size;
        let fits = self.encoder.input_size() == width
            && self.encoder.hidden_size() == h
            && self.decoder.input_size() == width
            && self.decoder.hidden_size() == h
            && self.out_proj.input_size() == h
            && self.out_proj.output_size() == width;
        if fits {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "predictor weights do not match t_obs={} t_pred={} n_p={} hidden={}",
                config.t_obs, config.t_pred, config.n_p, config.hidden_size
            )))
        }
    }
}

impl ParamSet for PredictorParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t.extend(self.out_proj.tensors());
        t
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.decoder.tensors_mut());
        t.extend(self.out_proj.tensors_mut());
        t
    }
}

fn check_packages(params: &PredictorParams, packages: &[Vec<f64>]) -> Result<()> {
    let width = params.encoder.input_size();
    for p in packages {
        if p.len() != width {
            return Err(NnError::Shape(format!(
                "package length {} but the model expects {width}",
                p.len()
            ))
            .into());
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite("package").into());
        }
    }
    Ok(())
}

/// Folds the encoder over the packages from a zero state.
pub fn encode(params: &PredictorParams, packed: &PackedSequence) -> Result<LstmState> {
    params.encoder.validate()?;
    check_packages(params, &packed.packages)?;
    let mut state = LstmState::zeros(params.encoder.hidden_size());
    for pkg in &packed.packages {
        state = lstm_forward(&params.encoder, pkg, &state).0;
    }
    Ok(state)
}

/// Runs the decoder for `steps` packages. The first input is the last
/// observed package; every later input is the previous output.
pub fn decode(
    params: &PredictorParams,
    init: LstmState,
    last_obs_package: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    if steps == 0 {
        return Err(Error::InvalidInput("decode needs at least one step".into()));
    }
    params.decoder.validate()?;
    params.out_proj.validate()?;
    check_packages(params, std::slice::from_ref(&last_obs_package.to_vec()))?;
    let hidden = params.decoder.hidden_size();
    if init.h.len() != hidden || init.c.len() != hidden {
        return Err(NnError::Shape("decoder initial state size".into()).into());
    }
    if params.out_proj.output_size() != params.decoder.input_size() {
        return Err(NnError::Shape("projection width differs from decoder input".into()).into());
    }
    let mut state = init;
    let mut input = last_obs_package.to_vec();
    let mut outputs = Vec::with_capacity(steps);
    for _ in 0..steps {
        state = lstm_forward(&params.decoder, &input, &state).0;
        let out = linear_forward_unchecked(&params.out_proj, &state.h);
        input = out.clone();
        outputs.push(out);
    }
    Ok(outputs)
}

/// Forecasts `t_pred` pose vectors from exactly `t_obs` observed ones.
pub fn predict(
    params: &PredictorParams,
    config: &PredictorConfig,
    obs: &[PoseVector],
) -> Result<Vec<PoseVector>> {
    config.validate()?;
    if obs.len() != config.t_obs {
        return Err(Error::InvalidInput(format!(
            "expected {} observed frames, got {}",
            config.t_obs,
            obs.len()
        )));
    }
    let packed = pack(obs, config.n_p)?;
    let state = encode(params, &packed)?;
    let last = packed.packages.last().expect("nonempty");
    let outputs = decode(params, state, last, config.decode_steps())?;
    unpack(
        &PackedSequence {
            packages: outputs,
            real_count: config.decode_steps() * config.n_p,
        },
        config.n_p,
        config.t_pred,
    )
}

/// Forward record of one encoder/decoder evaluation.
pub struct Seq2SeqTrace {
    encoder: Vec<LstmCache>,
    decoder: Vec<LstmCache>,
    decoder_h: Vec<Vec<f64>>,
    /// Raw decoder outputs, one package per step.
    pub outputs: Vec<Vec<f64>>,
}

/// Unchecked forward pass that keeps everything the backward pass needs.
pub fn forward_traced(params: &PredictorParams, packages: &[Vec<f64>], steps: usize) -> Seq2SeqTrace {
    let mut state = LstmState::zeros(params.encoder.hidden_size());
    let mut encoder = Vec::with_capacity(packages.len());
    for pkg in packages {
        let (s, c) = lstm_forward(&params.encoder, pkg, &state);
        encoder.push(c);
        state = s;
    }
    let mut input = packages.last().cloned().unwrap_or_default();
    let mut decoder = Vec::with_capacity(steps);
    let mut decoder_h = Vec::with_capacity(steps);
    let mut outputs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (s, c) = lstm_forward(&params.decoder, &input, &state);
        decoder.push(c);
        let out = linear_forward_unchecked(&params.out_proj, &s.h);
        decoder_h.push(s.h.clone());
        state = s;
        input = out.clone();
        outputs.push(out);
    }
    Seq2SeqTrace {
        encoder,
        decoder,
        decoder_h,
        outputs,
    }
}

/// Reverse pass given `dL/d output_k` for every decoder step; accumulates
/// parameter gradients into `grads`.
pub fn backward(
    params: &PredictorParams,
    trace: &Seq2SeqTrace,
    d_outputs: &[Vec<f64>],
    grads: &mut PredictorParams,
) {
    let hidden = params.decoder.hidden_size();
    let width = params.out_proj.output_size();
    let mut dh = vec![0.0; hidden];
    let mut dc = vec![0.0; hidden];
    // gradient reaching output k through its use as input k + 1
    let mut d_feedback = vec![0.0; width];
    for k in (0..trace.decoder.len()).rev() {
        let d_out: Vec<f64> = d_outputs[k]
            .iter()
            .zip(&d_feedback)
            .map(|(a, b)| a + b)
            .collect();
        let dh_proj = linear_backward(&params.out_proj, &trace.decoder_h[k], &d_out, &mut grads.out_proj);
        for (a, b) in dh.iter_mut().zip(&dh_proj) {
            *a += b;
        }
        let (dhp, dcp, dx) = lstm_backward(&params.decoder, &trace.decoder[k], &dh, &dc, &mut grads.decoder);
        dh = dhp;
        dc = dcp;
        d_feedback = dx;
    }
    for cache in trace.encoder.iter().rev() {
        let (dhp, dcp, _) = lstm_backward(&params.encoder, cache, &dh, &dc, &mut grads.encoder);
        dh = dhp;
        dc = dcp;
    }
}

/// Masked MSE between decoder outputs and the packed target. Zero-padded
/// tail positions of the target are excluded from both the mean and the
/// gradient.
pub fn packed_mse(outputs: &[Vec<f64>], target: &PackedSequence) -> (f64, Vec<Vec<f64>>) {
    let valid = target.real_count * POSE_DIM;
    let n = valid as f64;
    let mut loss = 0.0;
    let mut pos = 0;
    let grads = outputs
        .iter()
        .zip(&target.packages)
        .map(|(out, tgt)| {
            out.iter()
                .zip(tgt)
                .map(|(o, t)| {
                    let g = if pos < valid {
                        let d = o - t;
                        loss += d * d;
                        2.0 * d / n
                    } else {
                        0.0
                    };
                    pos += 1;
                    g
                })
                .collect()
        })
        .collect();
    (loss / n, grads)
}

/// Loss and parameter gradient for one (observed, target) pair.
pub fn loss_and_grad(
    params: &PredictorParams,
    config: &PredictorConfig,
    obs: &[PoseVector],
    target: &[PoseVector],
) -> Result<(f64, PredictorParams)> {
    let mut grads = params.zeros_like();
    let loss = accumulate_grad(params, config, obs, target, &mut grads)?;
    Ok((loss, grads))
}

fn accumulate_grad(
    params: &PredictorParams,
    config: &PredictorConfig,
    obs: &[PoseVector],
    target: &[PoseVector],
    grads: &mut PredictorParams,
) -> Result<f64> {
    if obs.len() != config.t_obs || target.len() != config.t_pred {
        return Err(Error::InvalidInput(format!(
            "window has {}+{} frames, config wants {}+{}",
            obs.len(),
            target.len(),
            config.t_obs,
            config.t_pred
        )));
    }
    let packed_obs = pack(obs, config.n_p)?;
    let packed_target = pack(target, config.n_p)?;
    let trace = forward_traced(params, &packed_obs.packages, config.decode_steps());
    let (loss, d_out) = packed_mse(&trace.outputs, &packed_target);
    backward(params, &trace, &d_out, grads);
    Ok(loss)
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingWindow<'a> {
    pub obs: &'a [PoseVector],
    pub target: &'a [PoseVector],
}

/// Every contiguous `t_obs + t_pred` window of every segment.
pub fn make_training_windows<'a>(
    segments: &'a [PoseVectorSequence],
    config: &PredictorConfig,
) -> Vec<TrainingWindow<'a>> {
    let len = config.window_len();
    segments
        .iter()
        .filter(|s| s.len() >= len)
        .flat_map(|s| {
            s.vectors.windows(len).map(|w| TrainingWindow {
                obs: &w[..config.t_obs],
                target: &w[config.t_obs..],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Global gradient norm limit.
    pub clip_norm: Option<f64>,
    /// Stop once this many optimizer steps have run.
    pub max_steps: Option<usize>,
    /// Stop when the epoch loss improves by less than this fraction over
    /// the last five epochs.
    pub plateau_tolerance: Option<f64>,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 100,
            batch_size: 32,
            seed: 0,
            adam: AdamConfig::default(),
            clip_norm: Some(5.0),
            max_steps: None,
            plateau_tolerance: Some(1e-4),
            execution: Execution::default(),
        }
    }
}

pub const PLATEAU_EPOCHS: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    /// Mean batch loss after each optimizer step.
    pub steps: Vec<f64>,
    /// Mean loss over each epoch.
    pub epochs: Vec<f64>,
}

impl LossCurve {
    pub fn plateaued(&self, tolerance: f64) -> bool {
        let n = self.epochs.len();
        if n <= PLATEAU_EPOCHS {
            return false;
        }
        let then = self.epochs[n - 1 - PLATEAU_EPOCHS];
        let now = self.epochs[n - 1];
        then <= 0.0 || (then - now) / then < tolerance
    }
}

/// Per-chunk gradient sums are reduced in chunk order, so results do not
/// depend on the thread count.
const GRAD_CHUNK: usize = 4;

/// Mean loss and mean gradient over a mini-batch.
pub fn batch_gradient(
    params: &PredictorParams,
    config: &PredictorConfig,
    batch: &[TrainingWindow<'_>],
    execution: Execution,
) -> Result<(f64, PredictorParams)> {
    let partial = exec::map_chunks(execution, batch, GRAD_CHUNK, |chunk| {
        let mut g = params.zeros_like();
        let mut loss = 0.0;
        for w in chunk {
            loss += accumulate_grad(params, config, w.obs, w.target, &mut g)?;
        }
        Ok::<_, Error>((loss, g))
    });
    let mut total_loss = 0.0;
    let mut grads: Option<PredictorParams> = None;
    for p in partial {
        let (l, g) = p?;
        total_loss += l;
        match grads.as_mut() {
            Some(acc) => acc.add_assign(&g),
            None => grads = Some(g),
        }
    }
    let mut grads = grads.ok_or_else(|| Error::InvalidInput("empty batch".into()))?;
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((total_loss / n, grads))
}

pub fn train_predictor(
    windows: &[TrainingWindow<'_>],
    config: &PredictorConfig,
    options: &TrainOptions,
) -> Result<(PredictorParams, LossCurve)> {
    config.validate()?;
    let params = PredictorParams::init(config, options.seed);
    train_predictor_from(params, windows, config, options)
}

/// Continues training from existing weights.
pub fn train_predictor_from(
    mut params: PredictorParams,
    windows: &[TrainingWindow<'_>],
    config: &PredictorConfig,
    options: &TrainOptions,
) -> Result<(PredictorParams, LossCurve)> {
    config.validate()?;
    params.check_config(config)?;
    if windows.is_empty() {
        return Err(Error::InvalidInput("no training windows".into()));
    }
    if options.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(0x9e37_79b9));
    let mut adam = AdamState::new(&params, options.adam);
    let mut curve = LossCurve::default();
    let mut order: Vec<usize> = (0..windows.len()).collect();

    'epochs: for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for idx in order.chunks(options.batch_size) {
            let batch: Vec<TrainingWindow<'_>> = idx.iter().map(|&i| windows[i]).collect();
            let (loss, mut grads) = batch_gradient(&params, config, &batch, options.execution)?;
            if !loss.is_finite() {
                return Err(NnError::NonFinite("training loss").into());
            }
            if let Some(max) = options.clip_norm {
                grads.clip_global_norm(max);
            }
            adam_update(&mut params, &grads, &mut adam)?;
            curve.steps.push(loss);
            epoch_loss += loss * batch.len() as f64;
            seen += batch.len();
            if options.max_steps.is_some_and(|m| curve.steps.len() >= m) {
                curve.epochs.push(epoch_loss / seen as f64);
                break 'epochs;
            }
        }
        curve.epochs.push(epoch_loss / seen as f64);
        if options.plateau_tolerance.is_some_and(|tol| curve.plateaued(tol)) {
            break;
        }
    }
    Ok((params, curve))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean over samples of the mean per-frame cosine similarity.
pub fn mcs(ground: &[Vec<PoseVector>], pred: &[Vec<PoseVector>]) -> Result<f64> {
    if ground.is_empty() || ground.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "mcs needs equal nonzero sample counts, got {} and {}",
            ground.len(),
            pred.len()
        )));
    }
    let mut total = 0.0;
    for (g, p) in ground.iter().zip(pred) {
        if g.is_empty() || g.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "mcs sample lengths differ: {} vs {}",
                g.len(),
                p.len()
            )));
        }
        let c: f64 = g.iter().zip(p).map(|(a, b)| cosine(&a.0, &b.0)).sum();
        total += c / g.len() as f64;
    }
    Ok(total / ground.len() as f64)
}

/// Forecasts every window and scores the forecasts with [`mcs`].
pub fn evaluate_mcs(
    params: &PredictorParams,
    config: &PredictorConfig,
    windows: &[TrainingWindow<'_>],
    execution: Execution,
) -> Result<f64> {
    let preds = exec::map(execution, windows, |w| predict(params, config, w.obs));
    let preds = preds.into_iter().collect::<Result<Vec<_>>>()?;
    let ground: Vec<Vec<PoseVector>> = windows.iter().map(|w| w.target.to_vec()).collect();
    mcs(&ground, &preds)
}

/// Random unit-bone pose, used by the gradient checks.
pub fn random_pose<R: Rng>(rng: &mut R) -> PoseVector {
    let mut v = [0.0; POSE_DIM];
    for slot in 0..POSE_DIM / 2 {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        v[2 * slot] = a.cos();
        v[2 * slot + 1] = a.sin();
    }
    PoseVector(v)
}

/// Compares backpropagated gradients of the full model with central
/// differences (step 1e-5) on one random window. The target is the model's
/// own forecast plus noise of scale 0.05: a small residual keeps the loss
/// small, so finite differences stay above round-off even for coordinates
/// whose gradient is near 1e-8. With `corrupt`, one analytic coordinate is
/// perturbed, which the check must catch.
pub fn check_gradients(config: &PredictorConfig, seed: u64, corrupt: bool) -> Result<GradCheckReport> {
    config.validate()?;
    let params = PredictorParams::init(config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let obs: Vec<PoseVector> = (0..config.t_obs).map(|_| random_pose(&mut rng)).collect();
    let target: Vec<PoseVector> = predict(&params, config, &obs)?
        .into_iter()
        .map(|p| {
            let mut v = p.0;
            for x in v.iter_mut() {
                *x += 0.05 * rng.random_range(-1.0..1.0);
            }
            PoseVector(v)
        })
        .collect();
    let (_, mut grads) = loss_and_grad(&params, config, &obs, &target)?;
    if corrupt {
        grads.decoder.w_f.data[0] = grads.decoder.w_f.data[0] * 1.1 + 1e-6;
    }
    let packed_obs = pack(&obs, config.n_p)?;
    let packed_target = pack(&target, config.n_p)?;
    let steps = config.decode_steps();
    Ok(grad_check(
        |p: &PredictorParams| packed_mse(&forward_traced(p, &packed_obs.packages, steps).outputs, &packed_target).0,
        &params,
        &grads,
        1e-5,
    ))
}
