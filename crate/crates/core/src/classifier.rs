//! Fully connected fall / no-fall classifier over a single pose vector.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::nn::{
    adam_update, cross_entropy_loss, grad_check, linear_backward, linear_forward_unchecked, softmax,
    AdamState, GradCheckReport, LinearParams, NnError, ParamSet,
};
use crate::predictor::{random_pose, LossCurve, TrainOptions};
use crate::skeleton::{detected_body_count, SkeletonFrame};
use crate::vectorize::{PoseVector, MIN_CLASSIFIABLE_KEYPOINTS, POSE_DIM};

/// Widths of the input, the five hidden layers and the output.
pub const LAYER_SIZES: [usize; 7] = [POSE_DIM, 96, 192, 192, 96, 24, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FallLabel {
    Fall,
    NoFall,
    Unknown,
}

impl FallLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FallLabel::Fall => "fall",
            FallLabel::NoFall => "no_fall",
            FallLabel::Unknown => "unknown",
        }
    }
}

impl std::str::FromStr for FallLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fall" => Ok(FallLabel::Fall),
            "no_fall" => Ok(FallLabel::NoFall),
            "unknown" => Ok(FallLabel::Unknown),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }
}

/// Ground-truth class. Index 0 is no fall, index 1 is fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    NoFall,
    Fall,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::NoFall => 0,
            ClassLabel::Fall => 1,
        }
    }
}

impl From<ClassLabel> for FallLabel {
    fn from(c: ClassLabel) -> Self {
        match c {
            ClassLabel::NoFall => FallLabel::NoFall,
            ClassLabel::Fall => FallLabel::Fall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPose {
    pub vector: PoseVector,
    pub label: ClassLabel,
    pub body_count: usize,
    pub source_id: String,
    pub frame_index: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub layers: Vec<LinearParams>,
}

impl ClassifierParams {
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ClassifierParams {
            layers: LAYER_SIZES
                .windows(2)
                .map(|w| LinearParams::init(w[0], w[1], &mut rng))
                .collect(),
        }
    }

    pub fn zeros() -> Self {
        ClassifierParams {
            layers: LAYER_SIZES
                .windows(2)
                .map(|w| LinearParams::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.layers.len() == LAYER_SIZES.len() - 1
            && self.layers.iter().zip(LAYER_SIZES.windows(2)).all(|(l, w)| {
                l.validate().is_ok() && l.input_size() == w[0] && l.output_size() == w[1]
            });
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "classifier layers must have widths {LAYER_SIZES:?}"
            )))
        }
    }
}

impl ParamSet for ClassifierParams {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }
    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: FallLabel,
    /// `[p_no_fall, p_fall]`.
    pub probabilities: [f64; 2],
}

impl Classification {
    pub fn p_fall(&self) -> f64 {
        self.probabilities[1]
    }
}

/// Layer inputs recorded on the way forward; `inputs[k]` feeds layer `k`.
struct MlpTrace {
    inputs: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn forward_traced(params: &ClassifierParams, x: &[f64]) -> MlpTrace {
    let last = params.layers.len() - 1;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut a = x.to_vec();
    for (k, layer) in params.layers.iter().enumerate() {
        let mut z = linear_forward_unchecked(layer, &a);
        if k < last {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        }
        inputs.push(a);
        a = z;
    }
    MlpTrace { inputs, logits: a }
}

/// Output logits (before softmax).
pub fn logits(params: &ClassifierParams, vector: &PoseVector) -> Vec<f64> {
    forward_traced(params, &vector.0).logits
}

fn backward(params: &ClassifierParams, trace: &MlpTrace, d_logits: &[f64], grads: &mut ClassifierParams) {
    let mut d = d_logits.to_vec();
    for k in (0..params.layers.len()).rev() {
        let dx = linear_backward(&params.layers[k], &trace.inputs[k], &d, &mut grads.layers[k]);
        if k > 0 {
            // inputs[k] is relu(z_{k-1}); zero where the unit was inactive
            d = dx
                .into_iter()
                .zip(&trace.inputs[k])
                .map(|(g, &a)| if a > 0.0 { g } else { 0.0 })
                .collect();
        }
    }
}

/// Cross-entropy of one labeled vector and its parameter gradient.
pub fn loss_and_grad(
    params: &ClassifierParams,
    vector: &PoseVector,
    label: ClassLabel,
) -> Result<(f64, ClassifierParams)> {
    let mut grads = params.zeros_like();
    let trace = forward_traced(params, &vector.0);
    let (loss, d) = cross_entropy_loss(&trace.logits, label.index())?;
    backward(params, &trace, &d, &mut grads);
    Ok((loss, grads))
}

pub fn label_from_probabilities(p: [f64; 2]) -> FallLabel {
    if p[1] > p[0] {
        FallLabel::Fall
    } else {
        FallLabel::NoFall
    }
}

pub fn classify(params: &ClassifierParams, vector: &PoseVector) -> Result<Classification> {
    params.validate()?;
    if !vector.0.iter().all(|v| v.is_finite()) {
        return Err(NnError::NonFinite("pose vector").into());
    }
    Ok(classify_unchecked(params, vector))
}

/// Classifies a raw slice, rejecting anything that is not 24 long.
pub fn classify_slice(params: &ClassifierParams, values: &[f64]) -> Result<Classification> {
    classify(params, &PoseVector::from_slice(values)?)
}

pub(crate) fn classify_unchecked(params: &ClassifierParams, vector: &PoseVector) -> Classification {
    let p = softmax(&logits(params, vector));
    let probabilities = [p[0], p[1]];
    Classification {
        label: label_from_probabilities(probabilities),
        probabilities,
    }
}

/// Returns `Unknown` without running the network when fewer than eight
/// body keypoints were detected.
pub fn prejudge_or_classify(
    params: &ClassifierParams,
    frame: &SkeletonFrame,
    vector: &PoseVector,
) -> Result<FallLabel> {
    Ok(prejudge_by_count(params, detected_body_count(frame), vector)?.label)
}

pub fn prejudge_by_count(
    params: &ClassifierParams,
    body_count: usize,
    vector: &PoseVector,
) -> Result<Classification> {
    if body_count < MIN_CLASSIFIABLE_KEYPOINTS {
        return Ok(Classification {
            label: FallLabel::Unknown,
            probabilities: [f64::NAN, f64::NAN],
        });
    }
    classify(params, vector)
}

const GRAD_CHUNK: usize = 16;

fn batch_gradient(
    params: &ClassifierParams,
    batch: &[&LabeledPose],
    execution: Execution,
) -> Result<(f64, ClassifierParams)> {
    let partial = exec::map_chunks(execution, batch, GRAD_CHUNK, |chunk| {
        let mut g = params.zeros_like();
        let mut loss = 0.0;
        for s in chunk {
            let trace = forward_traced(params, &s.vector.0);
            let (l, d) = cross_entropy_loss(&trace.logits, s.label.index())?;
            backward(params, &trace, &d, &mut g);
            loss += l;
        }
        Ok::<_, Error>((loss, g))
    });
    let mut total = 0.0;
    let mut grads = params.zeros_like();
    for p in partial {
        let (l, g) = p?;
        total += l;
        grads.add_assign(&g);
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// Samples with fewer than eight detected body keypoints are dropped
/// before training.
pub fn usable_training_samples(data: &[LabeledPose]) -> Vec<&LabeledPose> {
    data.iter()
        .filter(|s| s.body_count >= MIN_CLASSIFIABLE_KEYPOINTS)
        .collect()
}

pub fn train_classifier(
    data: &[LabeledPose],
    options: &TrainOptions,
) -> Result<(ClassifierParams, LossCurve)> {
    let samples = usable_training_samples(data);
    if samples.is_empty() {
        return Err(Error::InvalidInput("no classifiable training samples".into()));
    }
    let falls = samples.iter().filter(|s| s.label == ClassLabel::Fall).count();
    if falls == 0 || falls == samples.len() {
        return Err(Error::InvalidInput(
            "classifier training data must contain both classes".into(),
        ));
    }
    if options.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }

    let mut params = ClassifierParams::init(options.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(0x5bd1_e995));
    let mut adam = AdamState::new(&params, options.adam);
    let mut curve = LossCurve::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();

    'epochs: for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(options.batch_size) {
            let batch: Vec<&LabeledPose> = idx.iter().map(|&i| samples[i]).collect();
            let (loss, mut grads) = batch_gradient(&params, &batch, options.execution)?;
            if !loss.is_finite() {
                return Err(NnError::NonFinite("training loss").into());
            }
            if let Some(max) = options.clip_norm {
                grads.clip_global_norm(max);
            }
            adam_update(&mut params, &grads, &mut adam)?;
            curve.steps.push(loss);
            epoch_loss += loss * batch.len() as f64;
            if options.max_steps.is_some_and(|m| curve.steps.len() >= m) {
                curve.epochs.push(epoch_loss / samples.len() as f64);
                break 'epochs;
            }
        }
        curve.epochs.push(epoch_loss / samples.len() as f64);
        if options.plateau_tolerance.is_some_and(|tol| curve.plateaued(tol)) {
            break;
        }
    }
    Ok((params, curve))
}

/// Mean cross-entropy over classifiable samples.
pub fn mean_loss(params: &ClassifierParams, data: &[LabeledPose]) -> f64 {
    let samples = usable_training_samples(data);
    let total: f64 = samples
        .iter()
        .map(|s| {
            cross_entropy_loss(&logits(params, &s.vector), s.label.index())
                .map(|(l, _)| l)
                .unwrap_or(f64::NAN)
        })
        .sum();
    total / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub unknown: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub unknown_rate: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize, unknown: usize) -> Self {
        let total = tp + fp + fn_ + tn;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            total,
            tp,
            fp,
            fn_,
            tn,
            unknown,
            accuracy: ratio(tp + tn, total),
            precision,
            recall,
            f1,
            unknown_rate: ratio(unknown, total),
        }
    }
}

/// Confusion-matrix metrics with `Fall` as the positive class. `Unknown`
/// predictions count as `NoFall` and are tallied in `unknown`.
pub fn evaluate(preds: &[FallLabel], truth: &[ClassLabel]) -> Result<Metrics> {
    if preds.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn, mut unknown) = (0, 0, 0, 0, 0);
    for (&p, &t) in preds.iter().zip(truth) {
        if p == FallLabel::Unknown {
            unknown += 1;
        }
        match (p == FallLabel::Fall, t == ClassLabel::Fall) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn, unknown))
}

/// Same as [`evaluate`] but with `Unknown` predictions left out entirely.
pub fn evaluate_known(preds: &[FallLabel], truth: &[ClassLabel]) -> Result<Metrics> {
    if preds.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let (p, t): (Vec<FallLabel>, Vec<ClassLabel>) = preds
        .iter()
        .zip(truth)
        .filter(|(p, _)| **p != FallLabel::Unknown)
        .map(|(p, t)| (*p, *t))
        .unzip();
    evaluate(&p, &t)
}

/// Logit margin of the labeled class at which gradients are checked.
pub const GRADCHECK_MARGIN: f64 = 8.0;

/// Compares backpropagated gradients of the whole network with central
/// differences (step 1e-5) on one random pose labeled `Fall`. The output
/// bias is shifted so the label leads by [`GRADCHECK_MARGIN`]: at a random
/// init the loss is O(1) and its round-off swamps coordinates near 1e-8,
/// while a confident operating point keeps the loss small. With `corrupt`,
/// one analytic coordinate is perturbed.
pub fn check_gradients(seed: u64, corrupt: bool) -> GradCheckReport {
    let label = ClassLabel::Fall.index();
    let mut params = ClassifierParams::init(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v = random_pose(&mut rng);
    let z = logits(&params, &v);
    let last = params.layers.len() - 1;
    params.layers[last].b[label] += GRADCHECK_MARGIN - (z[label] - z[1 - label]);

    let mut grads = params.zeros_like();
    let trace = forward_traced(&params, &v.0);
    let (_, d) = cross_entropy_loss(&trace.logits, label).expect("two logits");
    backward(&params, &trace, &d, &mut grads);
    if corrupt {
        grads.layers[last].b[1] = grads.layers[last].b[1] * 1.1 + 1e-6;
    }
    grad_check(
        |q: &ClassifierParams| {
            cross_entropy_loss(&logits(q, &v), label)
                .map(|(l, _)| l)
                .unwrap_or(f64::NAN)
        },
        &params,
        &grads,
        1e-5,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Keypoint, BODY_KEYPOINTS};
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_pose(rng: &mut ChaCha8Rng, base: f64, spread: f64) -> PoseVector {
        let mut v = [0.0; POSE_DIM];
        for s in 0..POSE_DIM / 2 {
            let a = base + rng.random_range(-spread..spread);
            v[2 * s] = a.cos();
            v[2 * s + 1] = a.sin();
        }
        PoseVector(v)
    }

    fn sample(vector: PoseVector, label: ClassLabel) -> LabeledPose {
        LabeledPose {
            vector,
            label,
            body_count: 13,
            source_id: "s".into(),
            frame_index: 1,
        }
    }

    #[test]
    fn layer_widths() {
        let p = ClassifierParams::init(0);
        p.validate().unwrap();
        let widths: Vec<(usize, usize)> = p.layers.iter().map(|l| (l.input_size(), l.output_size())).collect();
        assert_eq!(widths, vec![(24, 96), (96, 192), (192, 192), (192, 96), (96, 24), (24, 2)]);
    }

    #[test]
    fn zero_model_ties_to_no_fall() {
        let c = classify(&ClassifierParams::zeros(), &PoseVector::ZERO).unwrap();
        assert_eq!(c.probabilities, [0.5, 0.5]);
        assert_eq!(c.label, FallLabel::NoFall);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let p = ClassifierParams::init(1);
        assert!(classify_slice(&p, &[0.0; 23]).is_err());
        assert!(classify_slice(&p, &[0.0; 24]).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn probabilities_normalized(v in prop::collection::vec(-1.0f64..1.0, 24), seed in 0u64..4) {
            let p = ClassifierParams::init(seed);
            let c = classify_slice(&p, &v).unwrap();
            prop_assert!((c.probabilities[0] + c.probabilities[1] - 1.0).abs() <= 1e-12);
            prop_assert!(c.probabilities.iter().all(|&x| x > 0.0 && x < 1.0));
            // constant shift of both logits leaves the decision alone
            let mut shifted = p.clone();
            for b in shifted.layers[5].b.iter_mut() { *b += 3.7; }
            prop_assert_eq!(classify_slice(&shifted, &v).unwrap().label, c.label);
        }
    }

    fn frame_with_body(n: usize) -> SkeletonFrame {
        let mut f = SkeletonFrame::empty(1, 0);
        for (j, &k) in BODY_KEYPOINTS.iter().take(n).enumerate() {
            f.keypoints[k] = Keypoint::new(j as f64 * 3.0, j as f64);
        }
        f
    }

    #[test]
    fn prejudging() {
        // a model that would fail if it were ever run
        let broken = ClassifierParams { layers: vec![] };
        let v = PoseVector::ZERO;
        assert_eq!(prejudge_or_classify(&broken, &frame_with_body(7), &v).unwrap(), FallLabel::Unknown);
        assert!(prejudge_or_classify(&broken, &frame_with_body(8), &v).is_err());

        let p = ClassifierParams::init(2);
        let expect = classify(&p, &v).unwrap().label;
        assert_eq!(prejudge_or_classify(&p, &frame_with_body(13), &v).unwrap(), expect);
        assert_eq!(prejudge_or_classify(&p, &frame_with_body(8), &v).unwrap(), expect);
    }

    #[test]
    fn gradient_check_full_classifier() {
        let r = check_gradients(3, false);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
        assert_eq!(r.checked, ClassifierParams::zeros().num_params());
        assert!(check_gradients(3, true).max_rel_error >= 1e-4);
    }

    fn separable(n: usize, seed: u64) -> Vec<LabeledPose> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    sample(unit_pose(&mut rng, 1.57, 0.3), ClassLabel::NoFall)
                } else {
                    sample(unit_pose(&mut rng, 0.0, 0.3), ClassLabel::Fall)
                }
            })
            .collect()
    }

    #[test]
    fn separable_clusters_reach_full_accuracy() {
        let data = separable(200, 1);
        let opts = TrainOptions {
            epochs: 50,
            batch_size: 16,
            seed: 7,
            plateau_tolerance: None,
            ..TrainOptions::default()
        };
        let (p, _) = train_classifier(&data, &opts).unwrap();
        let preds: Vec<FallLabel> = data.iter().map(|s| classify(&p, &s.vector).unwrap().label).collect();
        let truth: Vec<ClassLabel> = data.iter().map(|s| s.label).collect();
        assert_eq!(evaluate(&preds, &truth).unwrap().accuracy, 1.0);
    }

    #[test]
    fn initial_loss_near_ln2_and_determinism() {
        let data = separable(100, 2);
        let init = ClassifierParams::init(9);
        assert!((mean_loss(&init, &data) - std::f64::consts::LN_2).abs() < 0.1);

        let opts = TrainOptions {
            epochs: 2,
            batch_size: 8,
            seed: 9,
            ..TrainOptions::default()
        };
        let a = train_classifier(&data, &opts).unwrap();
        let b = train_classifier(&data, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_rejects_bad_data() {
        let opts = TrainOptions::default();
        assert!(train_classifier(&[], &opts).is_err());
        let one_class: Vec<LabeledPose> = separable(10, 3)
            .into_iter()
            .map(|mut s| {
                s.label = ClassLabel::Fall;
                s
            })
            .collect();
        assert!(train_classifier(&one_class, &opts).is_err());
        // the only no-fall samples are unclassifiable, so one class remains
        let mut mixed = one_class.clone();
        mixed[0].label = ClassLabel::NoFall;
        mixed[0].body_count = 7;
        assert!(train_classifier(&mixed, &opts).is_err());
    }

    #[test]
    fn metric_examples() {
        let truth = [ClassLabel::Fall, ClassLabel::NoFall, ClassLabel::Fall];
        let preds: Vec<FallLabel> = truth.iter().map(|&t| t.into()).collect();
        let m = evaluate(&preds, &truth).unwrap();
        assert_eq!((m.accuracy, m.f1), (1.0, 1.0));

        let all_fall = [ClassLabel::Fall; 4];
        let m = evaluate(&[FallLabel::NoFall; 4], &all_fall).unwrap();
        assert_eq!((m.recall, m.f1), (0.0, 0.0));

        let m = Metrics::from_counts(522, 53, 9, 2281, 0);
        assert_eq!(m.total, 2865);
        assert!((m.precision - 0.908).abs() < 5e-4);
        assert!((m.recall - 0.983).abs() < 5e-4);
        assert!((m.accuracy - 0.978).abs() < 5e-4);
        assert!((m.f1 - 0.944).abs() < 5e-4);

        assert!(evaluate(&preds[..2], &truth).is_err());
    }

    #[test]
    fn unknowns_count_as_no_fall() {
        let preds = [FallLabel::Unknown, FallLabel::Fall, FallLabel::Unknown];
        let truth = [ClassLabel::Fall, ClassLabel::Fall, ClassLabel::NoFall];
        let m = evaluate(&preds, &truth).unwrap();
        assert_eq!((m.tp, m.fn_, m.tn, m.unknown), (1, 1, 1, 2));
        assert!((m.unknown_rate - 2.0 / 3.0).abs() < 1e-15);
        let k = evaluate_known(&preds, &truth).unwrap();
        assert_eq!((k.total, k.tp, k.unknown), (1, 1, 0));
    }

    fn label_strategy() -> impl Strategy<Value = FallLabel> {
        prop_oneof![Just(FallLabel::Fall), Just(FallLabel::NoFall), Just(FallLabel::Unknown)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn metrics_match_confusion_oracle(pairs in prop::collection::vec((label_strategy(), any::<bool>()), 0..60)) {
            let preds: Vec<FallLabel> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<ClassLabel> = pairs.iter().map(|p| if p.1 { ClassLabel::Fall } else { ClassLabel::NoFall }).collect();
            let m = evaluate(&preds, &truth).unwrap();

            let mut cm = [[0usize; 2]; 2];
            for (p, t) in preds.iter().zip(&truth) {
                let pi = usize::from(*p == FallLabel::Fall);
                cm[pi][t.index()] += 1;
            }
            let (tp, fp, fn_, tn) = (cm[1][1], cm[1][0], cm[0][1], cm[0][0]);
            prop_assert_eq!((m.tp, m.fp, m.fn_, m.tn), (tp, fp, fn_, tn));
            let n = pairs.len();
            let acc = if n == 0 { 0.0 } else { (tp + tn) as f64 / n as f64 };
            let prec = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let rec = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            prop_assert_eq!(m.accuracy, acc);
            prop_assert_eq!(m.precision, prec);
            prop_assert_eq!(m.recall, rec);
            prop_assert_eq!(m.f1, f1);
        }
    }
}
