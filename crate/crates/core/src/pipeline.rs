//! Per-track inference: direct classification of each frame, or
//! classification of the pose forecast for that frame from the window that
//! ends `t_pred` frames earlier.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    evaluate, evaluate_known, prejudge_by_count, ClassLabel, ClassifierParams, FallLabel,
    LabeledPose, Metrics,
};
use crate::dataset::{frame_label, AnnotationPrinciple, VideoAnnotation};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ingest::{segment_sequences, TrackedSequence};
use crate::predictor::{predict, PredictorConfig, PredictorParams, RENORM_MIN_NORM};
use crate::skeleton::coco_topology;
use crate::vectorize::{vectorize_sequence, PoseVectorSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub predictor: PredictorConfig,
    /// Include `Unknown` rows in the written verdict stream.
    pub emit_unknowns: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            predictor: PredictorConfig::default(),
            emit_unknowns: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Forecast,
    Direct,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Forecast => "forecast",
            Basis::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameVerdict {
    pub source_id: String,
    pub track_id: i64,
    pub frame_index: i64,
    pub label: FallLabel,
    /// `[p_no_fall, p_fall]`; NaN for `Unknown`.
    pub probabilities: [f64; 2],
    pub basis: Basis,
}

impl FrameVerdict {
    fn key(&self) -> (&str, i64, i64) {
        (&self.source_id, self.track_id, self.frame_index)
    }
}

/// Splits tracks at detection gaps and vectorizes every segment.
pub fn prepare_segments(tracks: &[TrackedSequence]) -> Vec<PoseVectorSequence> {
    let topology = coco_topology();
    tracks
        .iter()
        .flat_map(segment_sequences)
        .map(|s| vectorize_sequence(&s, &topology))
        .collect()
}

/// Forecast verdict for segment position `p`, or `None` when the segment
/// has no full observation window ending at `p - t_pred`. Only positions
/// `p - t_pred - t_obs + 1 ..= p - t_pred` are read.
pub fn forecast_at(
    predictor: &PredictorParams,
    classifier: &ClassifierParams,
    config: &PredictorConfig,
    segment: &PoseVectorSequence,
    p: usize,
) -> Result<Option<FrameVerdict>> {
    let span = config.window_len() - 1;
    if p < span || p >= segment.len() {
        return Ok(None);
    }
    let start = p - span;
    let last_obs = p - config.t_pred;
    let obs = &segment.vectors[start..=last_obs];
    let forecast = predict(predictor, config, obs)?;
    let pose = forecast
        .last()
        .expect("t_pred > 0")
        .renormalized(RENORM_MIN_NORM);
    let c = prejudge_by_count(classifier, segment.body_counts[last_obs], &pose)?;
    Ok(Some(FrameVerdict {
        source_id: segment.source_id.clone(),
        track_id: segment.track_id,
        frame_index: segment.frame_indices[p],
        label: c.label,
        probabilities: c.probabilities,
        basis: Basis::Forecast,
    }))
}

fn forecast_segment(
    predictor: &PredictorParams,
    classifier: &ClassifierParams,
    config: &PredictorConfig,
    segment: &PoseVectorSequence,
) -> Result<Vec<FrameVerdict>> {
    let mut out = Vec::new();
    for p in 0..segment.len() {
        if let Some(v) = forecast_at(predictor, classifier, config, segment, p)? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Forecast verdicts for every segment position with a full window,
/// ordered by segment and frame.
pub fn run_forecast_pipeline(
    predictor: &PredictorParams,
    classifier: &ClassifierParams,
    config: &PipelineConfig,
    segments: &[PoseVectorSequence],
) -> Result<Vec<FrameVerdict>> {
    config.predictor.validate()?;
    predictor.check_config(&config.predictor)?;
    classifier.validate()?;
    let per_segment = exec::map(config.execution, segments, |s| {
        forecast_segment(predictor, classifier, &config.predictor, s)
    });
    let mut out = Vec::new();
    for v in per_segment {
        out.extend(v?);
    }
    Ok(out)
}

/// Classifies each frame's own vector.
pub fn run_direct_pipeline(
    classifier: &ClassifierParams,
    config: &PipelineConfig,
    segments: &[PoseVectorSequence],
) -> Result<Vec<FrameVerdict>> {
    classifier.validate()?;
    let per_segment = exec::map(config.execution, segments, |s| {
        s.vectors
            .iter()
            .zip(&s.body_counts)
            .zip(&s.frame_indices)
            .map(|((v, &count), &frame_index)| {
                let c = prejudge_by_count(classifier, count, v)?;
                Ok(FrameVerdict {
                    source_id: s.source_id.clone(),
                    track_id: s.track_id,
                    frame_index,
                    label: c.label,
                    probabilities: c.probabilities,
                    basis: Basis::Direct,
                })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::new();
    for v in per_segment {
        out.extend(v?);
    }
    Ok(out)
}

/// Ground-truth label of every verdict's frame.
pub fn verdict_truth(
    verdicts: &[FrameVerdict],
    annotations: &BTreeMap<String, VideoAnnotation>,
    principle: AnnotationPrinciple,
) -> Result<Vec<ClassLabel>> {
    verdicts
        .iter()
        .map(|v| {
            annotations
                .get(&v.source_id)
                .map(|a| frame_label(a, principle, v.frame_index))
                .ok_or_else(|| Error::Annotation(format!("no annotation for {:?}", v.source_id)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeScores {
    /// Unknown verdicts counted as no-fall.
    pub all: Metrics,
    /// Unknown verdicts left out.
    pub known: Metrics,
}

pub fn score_verdicts(
    verdicts: &[FrameVerdict],
    annotations: &BTreeMap<String, VideoAnnotation>,
    principle: AnnotationPrinciple,
) -> Result<ModeScores> {
    let truth = verdict_truth(verdicts, annotations, principle)?;
    let labels: Vec<FallLabel> = verdicts.iter().map(|v| v.label).collect();
    Ok(ModeScores {
        all: evaluate(&labels, &truth)?,
        known: evaluate_known(&labels, &truth)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub common_frames: usize,
    pub direct: ModeScores,
    pub forecast: ModeScores,
}

/// Scores both modes on the frames that have a verdict in each.
pub fn compare_modes(
    direct: &[FrameVerdict],
    forecast: &[FrameVerdict],
    annotations: &BTreeMap<String, VideoAnnotation>,
    principle: AnnotationPrinciple,
) -> Result<ModeComparison> {
    let forecast_keys: HashMap<_, usize> = forecast
        .iter()
        .enumerate()
        .map(|(i, v)| (v.key(), i))
        .collect();
    if forecast_keys.len() != forecast.len() {
        return Err(Error::InvalidInput("duplicate forecast verdicts".into()));
    }
    let mut d = Vec::new();
    let mut f = Vec::new();
    for v in direct {
        if let Some(&i) = forecast_keys.get(&v.key()) {
            d.push(v.clone());
            f.push(forecast[i].clone());
        }
    }
    if d.is_empty() {
        return Err(Error::InvalidInput(
            "direct and forecast verdicts share no frames".into(),
        ));
    }
    Ok(ModeComparison {
        common_frames: d.len(),
        direct: score_verdicts(&d, annotations, principle)?,
        forecast: score_verdicts(&f, annotations, principle)?,
    })
}

/// First frame with a `Fall` verdict, per source and track.
pub fn first_fall_frames(verdicts: &[FrameVerdict]) -> BTreeMap<(String, i64), i64> {
    let mut out: BTreeMap<(String, i64), i64> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.label == FallLabel::Fall) {
        out.entry((v.source_id.clone(), v.track_id))
            .and_modify(|f| *f = (*f).min(v.frame_index))
            .or_insert(v.frame_index);
    }
    out
}

/// One labeled pose per frame of every track, for classifier training.
/// Under `P2` the falling frames are labeled `Fall` too.
pub fn labeled_frames(
    tracks: &[TrackedSequence],
    annotations: &BTreeMap<String, VideoAnnotation>,
    principle: AnnotationPrinciple,
) -> Result<Vec<LabeledPose>> {
    let topology = coco_topology();
    let mut out = Vec::new();
    for t in tracks {
        let ann = annotations
            .get(&t.source_id)
            .ok_or_else(|| Error::Annotation(format!("no annotation for {:?}", t.source_id)))?;
        ann.validate()?;
        let seq = vectorize_sequence(t, &topology);
        for ((v, &count), &frame) in seq.vectors.iter().zip(&seq.body_counts).zip(&seq.frame_indices) {
            out.push(LabeledPose {
                vector: *v,
                label: frame_label(ann, principle, frame),
                body_count: count,
                source_id: t.source_id.clone(),
                frame_index: frame,
            });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct VerdictRow<'a> {
    source_id: &'a str,
    track_id: i64,
    frame: i64,
    label: &'static str,
    p_fall: Option<f64>,
    basis: &'static str,
}

/// Writes `source_id,track_id,frame,label,p_fall,basis` rows. `p_fall` is
/// empty for unknown rows.
pub fn write_verdicts<W: Write>(out: W, verdicts: &[FrameVerdict], emit_unknowns: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["source_id", "track_id", "frame", "label", "p_fall", "basis"])?;
    for v in verdicts {
        if v.label == FallLabel::Unknown && !emit_unknowns {
            continue;
        }
        w.serialize(VerdictRow {
            source_id: &v.source_id,
            track_id: v.track_id,
            frame: v.frame_index,
            label: v.label.as_str(),
            p_fall: (v.label != FallLabel::Unknown).then_some(v.probabilities[1]),
            basis: v.basis.as_str(),
        })?;
    }
    w.flush().map_err(|e| Error::io("<verdicts>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_motion, MotionKind, MotionScript};
    use crate::vectorize::{PoseVector, POSE_DIM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> PredictorConfig {
        PredictorConfig {
            t_obs: 25,
            t_pred: 50,
            n_p: 5,
            hidden_size: 6,
        }
    }

    fn segment(n: usize, seed: u64) -> PoseVectorSequence {
        let script = MotionScript {
            kind: MotionKind::Walk,
            duration: n,
            noise_std: 1.0,
            occlusion_rate: 0.0,
            seed,
            source_id: format!("s{seed}"),
        };
        let (track, _) = synth_motion(&script).unwrap();
        vectorize_sequence(&track, &coco_topology())
    }

    fn models() -> (PredictorParams, ClassifierParams, PipelineConfig) {
        let cfg = PipelineConfig {
            predictor: tiny_config(),
            ..PipelineConfig::default()
        };
        (PredictorParams::init(&cfg.predictor, 1), ClassifierParams::init(2), cfg)
    }

    #[test]
    fn window_arithmetic() {
        let (p, c, cfg) = models();
        let v = run_forecast_pipeline(&p, &c, &cfg, &[segment(100, 1)]).unwrap();
        assert_eq!(v.len(), 26);
        assert_eq!(v[0].frame_index, 75);
        assert_eq!(v[25].frame_index, 100);
        assert!(v.iter().all(|x| x.basis == Basis::Forecast));
        assert!(run_forecast_pipeline(&p, &c, &cfg, &[segment(74, 1)]).unwrap().is_empty());
    }

    #[test]
    fn direct_covers_every_frame() {
        let (_, c, cfg) = models();
        let v = run_direct_pipeline(&c, &cfg, &[segment(60, 3)]).unwrap();
        assert_eq!(v.len(), 60);
        assert!(v.iter().all(|x| x.label != FallLabel::Unknown));
    }

    #[test]
    fn config_mismatch_rejected() {
        let (p, c, mut cfg) = models();
        cfg.predictor.hidden_size = 7;
        assert!(run_forecast_pipeline(&p, &c, &cfg, &[segment(80, 1)]).is_err());
    }

    #[test]
    fn verdict_ignores_recent_frames() {
        let (p, c, cfg) = models();
        let seg = segment(120, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for pos in [74usize, 90, 119] {
            let before = forecast_at(&p, &c, &cfg.predictor, &seg, pos).unwrap().unwrap();
            let mut scrambled = seg.clone();
            for k in pos - 49..scrambled.len() {
                let mut v = [0.0; POSE_DIM];
                v.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
                scrambled.vectors[k] = PoseVector(v);
                scrambled.body_counts[k] = 0;
            }
            let after = forecast_at(&p, &c, &cfg.predictor, &scrambled, pos).unwrap().unwrap();
            assert_eq!(before.label, after.label);
            assert_eq!(before.probabilities.map(f64::to_bits), after.probabilities.map(f64::to_bits));
        }
    }

    #[test]
    fn verdict_stream_is_reproducible() {
        let (p, c, cfg) = models();
        let segs = [segment(90, 6), segment(110, 7)];
        let seq_cfg = PipelineConfig {
            execution: Execution::Sequential,
            ..cfg
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_verdicts(&mut a, &run_forecast_pipeline(&p, &c, &cfg, &segs).unwrap(), true).unwrap();
        write_verdicts(&mut b, &run_forecast_pipeline(&p, &c, &seq_cfg, &segs).unwrap(), true).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("source_id,track_id,frame,label,p_fall,basis\n"));
        assert_eq!(text.lines().count(), 1 + 16 + 36);
    }

    #[test]
    fn unknown_rows_only_on_request() {
        let v = FrameVerdict {
            source_id: "a".into(),
            track_id: 0,
            frame_index: 3,
            label: FallLabel::Unknown,
            probabilities: [f64::NAN; 2],
            basis: Basis::Direct,
        };
        let mut quiet = Vec::new();
        write_verdicts(&mut quiet, std::slice::from_ref(&v), false).unwrap();
        assert_eq!(String::from_utf8(quiet).unwrap().lines().count(), 1);
        let mut loud = Vec::new();
        write_verdicts(&mut loud, &[v], true).unwrap();
        assert!(String::from_utf8(loud).unwrap().contains("a,0,3,unknown,,direct"));
    }

    #[test]
    fn identical_verdicts_identical_rows() {
        let (_, c, cfg) = models();
        let seg = segment(80, 8);
        let direct = run_direct_pipeline(&c, &cfg, &[seg.clone()]).unwrap();
        let as_forecast: Vec<FrameVerdict> = direct
            .iter()
            .map(|v| FrameVerdict {
                basis: Basis::Forecast,
                ..v.clone()
            })
            .collect();
        let mut anns = BTreeMap::new();
        anns.insert(seg.source_id.clone(), VideoAnnotation::no_fall(80));
        let cmp = compare_modes(&direct, &as_forecast, &anns, AnnotationPrinciple::P3).unwrap();
        assert_eq!(cmp.common_frames, 80);
        assert_eq!(cmp.direct, cmp.forecast);
        assert!(compare_modes(&direct, &[], &anns, AnnotationPrinciple::P3).is_err());
    }
}
