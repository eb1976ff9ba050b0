//! Command implementations. Each takes a plain options struct (stored
//! verbatim in the run manifest) and returns a summary; nothing here
//! parses arguments or exits the process.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{train_classifier, usable_training_samples, ClassLabel};
use crate::dataset::{
    read_annotations, split, synth_corpus, write_annotations, AnnotationPrinciple, CorpusSpec,
    SplitMode, VideoAnnotation, TRAIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{load_tracks, write_pose_file, TrackedSequence};
use crate::model_io::{
    load_classifier, load_predictor, save_classifier, save_predictor, SavedClassifier,
    SavedPredictor,
};
use crate::nn::GradCheckReport;
use crate::pipeline::{
    compare_modes, first_fall_frames, labeled_frames, prepare_segments, run_direct_pipeline,
    run_forecast_pipeline, score_verdicts, write_verdicts, FrameVerdict, ModeComparison,
    ModeScores, PipelineConfig,
};
use crate::predictor::{
    check_gradients, evaluate_mcs, make_training_windows, packed_mse, train_predictor_from,
    LossCurve, PredictorConfig, PredictorParams, TrainOptions, TrainingWindow,
};
use crate::report::{mcs_plot_svg, metrics_table, write_loss_table, write_mcs_table, McsPoint};
use crate::skeleton::coco_topology;
use crate::vectorize::{vectorize_sequence, write_vector_table};

pub const POSES_DIR: &str = "poses";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
/// Gradient checks pass below this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const OVERFIT_STEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    #[default]
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Direct,
    Forecast,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InferMode {
    Direct,
    #[default]
    Forecast,
}

/// Which videos of a data directory a command reads. Videos are split 7:3
/// by source id with `split_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSelection {
    pub data_dir: PathBuf,
    /// Defaults to `annotations.csv` in the data directory.
    pub annotations: Option<PathBuf>,
    pub subset: Subset,
    pub split_seed: u64,
}

impl DataSelection {
    fn annotations_path(&self) -> PathBuf {
        self.annotations
            .clone()
            .unwrap_or_else(|| self.data_dir.join(ANNOTATIONS_FILE))
    }

    pub fn load_annotations(&self) -> Result<BTreeMap<String, VideoAnnotation>> {
        let path = self.annotations_path();
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        read_annotations(file)
    }

    pub fn load_tracks(&self) -> Result<Vec<TrackedSequence>> {
        let tracks = load_corpus(&self.data_dir)?;
        Ok(select_subset(tracks, self.subset, self.split_seed))
    }
}

/// Keypoint files of a data directory: `poses/*.json` when that directory
/// exists, otherwise `*.json` directly inside, in file-name order.
pub fn pose_files(data_dir: &Path) -> Result<Vec<PathBuf>> {
    let poses = data_dir.join(POSES_DIR);
    let dir = if poses.is_dir() { poses } else { data_dir.to_path_buf() };
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            p.is_file() && name.ends_with(".json") && !name.ends_with("manifest.json")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no keypoint files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn load_corpus(data_dir: &Path) -> Result<Vec<TrackedSequence>> {
    let mut out = Vec::new();
    for f in pose_files(data_dir)? {
        out.extend(load_tracks(&f)?);
    }
    Ok(out)
}

pub fn select_subset(tracks: Vec<TrackedSequence>, subset: Subset, split_seed: u64) -> Vec<TrackedSequence> {
    if subset == Subset::All {
        return tracks;
    }
    let mut ids: Vec<String> = tracks.iter().map(|t| t.source_id.clone()).collect();
    ids.sort();
    ids.dedup();
    let (train, test) = split(ids, TRAIN_FRACTION, split_seed, SplitMode::ByVideo, |s| s.clone());
    let keep: HashSet<String> = if subset == Subset::Train { train } else { test }
        .into_iter()
        .collect();
    tracks
        .into_iter()
        .filter(|t| keep.contains(&t.source_id))
        .collect()
}

/// `dir/stem.suffix` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Creates the output's directory up front so a bad path fails before
/// training starts.
fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e)),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub out_dir: PathBuf,
    pub corpus: CorpusSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub files: Vec<PathBuf>,
    pub per_kind: BTreeMap<String, usize>,
    pub annotations: PathBuf,
}

/// Writes one keypoint file per sequence under `poses/` and a shared
/// annotation file.
pub fn cmd_synth(opts: &SynthOptions, execution: Execution) -> Result<SynthSummary> {
    let videos = synth_corpus(&opts.corpus, execution)?;
    let poses = opts.out_dir.join(POSES_DIR);
    std::fs::create_dir_all(&poses).map_err(|e| Error::io(&poses, e))?;
    let mut files = Vec::with_capacity(videos.len());
    let mut per_kind = BTreeMap::new();
    let mut anns = BTreeMap::new();
    for v in &videos {
        let id = &v.sequence.source_id;
        let path = poses.join(format!("{id}.json"));
        write_bytes(&path, &write_pose_file(id, std::slice::from_ref(&v.sequence))?)?;
        files.push(path);
        *per_kind.entry(v.kind.as_str().to_string()).or_insert(0) += 1;
        anns.insert(id.clone(), v.annotation);
    }
    let ann_path = opts.out_dir.join(ANNOTATIONS_FILE);
    let mut buf = Vec::new();
    write_annotations(&mut buf, &anns)?;
    write_bytes(&ann_path, &buf)?;
    Ok(SynthSummary {
        files,
        per_kind,
        annotations: ann_path,
    })
}

// ---------------------------------------------------------------- training

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPredictorOptions {
    pub data: DataSelection,
    pub out: PathBuf,
    pub config: PredictorConfig,
    pub train: TrainOptions,
    /// Keep every `stride`-th training window.
    pub stride: usize,
    pub resume: Option<PathBuf>,
    /// Train on the first window only, one window per step, for
    /// `max_steps` (default 2000) steps.
    pub overfit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub samples: usize,
    pub curve: LossCurve,
    /// Loss of the final model on the training samples.
    pub final_loss: f64,
    pub model: PathBuf,
    pub tables: Vec<PathBuf>,
}

fn write_curve_tables(out: &Path, curve: &LossCurve) -> Result<Vec<PathBuf>> {
    let epochs = sibling(out, "epochs.csv");
    let steps = sibling(out, "steps.csv");
    let mut buf = Vec::new();
    write_loss_table(&mut buf, "epoch", &curve.epochs)?;
    write_bytes(&epochs, &buf)?;
    buf.clear();
    write_loss_table(&mut buf, "step", &curve.steps)?;
    write_bytes(&steps, &buf)?;
    Ok(vec![epochs, steps])
}

fn window_loss(params: &PredictorParams, config: &PredictorConfig, w: &TrainingWindow<'_>) -> Result<f64> {
    let packed = crate::predictor::pack(w.obs, config.n_p)?;
    let target = crate::predictor::pack(w.target, config.n_p)?;
    let trace = crate::predictor::forward_traced(params, &packed.packages, config.decode_steps());
    Ok(packed_mse(&trace.outputs, &target).0)
}

pub fn cmd_train_predictor(opts: &TrainPredictorOptions, execution: Execution) -> Result<TrainSummary> {
    let config = opts.config;
    config.validate()?;
    if opts.stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let params = match &opts.resume {
        Some(path) => {
            let saved = load_predictor(path)?;
            if saved.config != config {
                return Err(Error::Config(format!(
                    "refusing to resume {}: it was trained with {:?}, requested {:?}",
                    path.display(),
                    saved.config,
                    config
                )));
            }
            saved.params
        }
        None => PredictorParams::init(&config, opts.train.seed),
    };
    ensure_parent(&opts.out)?;
    let tracks = opts.data.load_tracks()?;
    let segments = prepare_segments(&tracks);
    let all = make_training_windows(&segments, &config);
    let mut train = opts.train;
    train.execution = execution;
    let windows: Vec<TrainingWindow<'_>> = if opts.overfit {
        let steps = train.max_steps.unwrap_or(OVERFIT_STEPS);
        train.batch_size = 1;
        train.epochs = steps;
        train.max_steps = Some(steps);
        train.plateau_tolerance = None;
        all.into_iter().take(1).collect()
    } else {
        all.into_iter().step_by(opts.stride).collect()
    };
    if windows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no {}-frame windows in the selected data",
            config.window_len()
        )));
    }
    let (params, curve) = train_predictor_from(params, &windows, &config, &train)?;
    let final_loss = if opts.overfit {
        window_loss(&params, &config, &windows[0])?
    } else {
        curve.epochs.last().copied().unwrap_or(f64::NAN)
    };
    let saved = SavedPredictor {
        params,
        config,
        seed: train.seed,
        hyperparameters: Some(train),
    };
    save_predictor(&opts.out, &saved)?;
    Ok(TrainSummary {
        samples: windows.len(),
        tables: write_curve_tables(&opts.out, &curve)?,
        curve,
        final_loss,
        model: opts.out.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainClassifierOptions {
    pub data: DataSelection,
    pub out: PathBuf,
    pub principle: AnnotationPrinciple,
    pub train: TrainOptions,
}

pub fn cmd_train_classifier(opts: &TrainClassifierOptions, execution: Execution) -> Result<TrainSummary> {
    ensure_parent(&opts.out)?;
    let anns = opts.data.load_annotations()?;
    let tracks = opts.data.load_tracks()?;
    let data = labeled_frames(&tracks, &anns, opts.principle)?;
    let usable = usable_training_samples(&data);
    let falls = usable.iter().filter(|s| s.label == ClassLabel::Fall).count();
    if falls == 0 || falls == usable.len() {
        return Err(Error::InvalidInput(format!(
            "training data must contain both classes ({falls} fall of {} classifiable frames)",
            usable.len()
        )));
    }
    let mut train = opts.train;
    train.execution = execution;
    let (params, curve) = train_classifier(&data, &train)?;
    let final_loss = crate::classifier::mean_loss(&params, &data);
    save_classifier(
        &opts.out,
        &SavedClassifier {
            params,
            seed: train.seed,
            hyperparameters: Some(train),
            principle: Some(opts.principle),
        },
    )?;
    Ok(TrainSummary {
        samples: usable.len(),
        tables: write_curve_tables(&opts.out, &curve)?,
        curve,
        final_loss,
        model: opts.out.clone(),
    })
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub data: DataSelection,
    pub predictor: Option<PathBuf>,
    pub classifier: PathBuf,
    pub mode: EvalMode,
    pub principle: AnnotationPrinciple,
    /// JSON report.
    pub report: Option<PathBuf>,
    pub verdicts: Option<PathBuf>,
    pub emit_unknowns: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyDetection {
    pub fall_videos: usize,
    /// Videos whose first forecast `Fall` verdict is at or before `S_gu`.
    pub detected: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub principle: AnnotationPrinciple,
    pub direct: Option<ModeScores>,
    pub forecast: Option<ModeScores>,
    pub comparison: Option<ModeComparison>,
    pub early_detection: Option<EarlyDetection>,
    pub table: String,
}

/// Share of annotated fall videos with a forecast `Fall` verdict at or
/// before the getting-up frame.
pub fn early_detection(
    forecast: &[FrameVerdict],
    annotations: &BTreeMap<String, VideoAnnotation>,
    sources: &[String],
) -> EarlyDetection {
    let first = first_fall_frames(forecast);
    let mut fall_videos = 0;
    let mut detected = 0;
    for id in sources {
        let Some(ann) = annotations.get(id).filter(|a| a.has_fall()) else {
            continue;
        };
        fall_videos += 1;
        if first
            .iter()
            .any(|((src, _), &f)| src == id && f <= ann.s_gu)
        {
            detected += 1;
        }
    }
    EarlyDetection {
        fall_videos,
        detected,
        rate: if fall_videos == 0 {
            0.0
        } else {
            detected as f64 / fall_videos as f64
        },
    }
}

pub fn cmd_eval(opts: &EvalOptions, execution: Execution) -> Result<EvalReport> {
    let classifier = load_classifier(&opts.classifier)?.params;
    let predictor = match (opts.mode, &opts.predictor) {
        (EvalMode::Direct, _) => None,
        (_, Some(p)) => Some(load_predictor(p)?),
        (_, None) => {
            return Err(Error::Config(
                "forecast evaluation needs a predictor model".into(),
            ))
        }
    };
    let anns = opts.data.load_annotations()?;
    let tracks = opts.data.load_tracks()?;
    let mut sources: Vec<String> = tracks.iter().map(|t| t.source_id.clone()).collect();
    sources.sort();
    sources.dedup();
    let segments = prepare_segments(&tracks);
    let config = PipelineConfig {
        predictor: predictor.as_ref().map(|p| p.config).unwrap_or_default(),
        emit_unknowns: opts.emit_unknowns,
        execution,
    };

    let direct = match opts.mode {
        EvalMode::Forecast => None,
        _ => Some(run_direct_pipeline(&classifier, &config, &segments)?),
    };
    let forecast = match &predictor {
        Some(p) => Some(run_forecast_pipeline(&p.params, &classifier, &config, &segments)?),
        None => None,
    };

    let direct_scores = direct
        .as_deref()
        .map(|v| score_verdicts(v, &anns, opts.principle))
        .transpose()?;
    let forecast_scores = forecast
        .as_deref()
        .map(|v| score_verdicts(v, &anns, opts.principle))
        .transpose()?;
    let comparison = match (&direct, &forecast) {
        (Some(d), Some(f)) if !f.is_empty() => Some(compare_modes(d, f, &anns, opts.principle)?),
        _ => None,
    };
    let early = forecast.as_deref().map(|f| early_detection(f, &anns, &sources));

    let mut rows = Vec::new();
    if let Some(s) = &direct_scores {
        rows.push(("direct, all frames".to_string(), s.all));
    }
    if let Some(s) = &forecast_scores {
        rows.push(("forecast".to_string(), s.all));
    }
    if let Some(c) = &comparison {
        rows.push(("direct, common frames".to_string(), c.direct.all));
        rows.push(("forecast, common frames".to_string(), c.forecast.all));
    }
    let report = EvalReport {
        principle: opts.principle,
        direct: direct_scores,
        forecast: forecast_scores,
        comparison,
        early_detection: early,
        table: metrics_table(&rows),
    };

    if let Some(path) = &opts.verdicts {
        let mut all = direct.unwrap_or_default();
        all.extend(forecast.unwrap_or_default());
        let mut buf = Vec::new();
        write_verdicts(&mut buf, &all, opts.emit_unknowns)?;
        write_bytes(path, &buf)?;
    }
    if let Some(path) = &opts.report {
        write_bytes(path, &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------- mcs sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsSweepOptions {
    pub data_dir: PathBuf,
    pub split_seed: u64,
    /// `(t_obs, t_pred)` pairs.
    pub horizons: Vec<(usize, usize)>,
    pub n_p_values: Vec<usize>,
    pub hidden_size: usize,
    pub train: TrainOptions,
    pub stride: usize,
    pub eval_stride: usize,
    pub plot: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

/// Trains one predictor per `(t_obs, t_pred, n_p)` on the train side of
/// the split and scores it on the test side.
pub fn cmd_mcs_sweep(opts: &McsSweepOptions, execution: Execution) -> Result<Vec<McsPoint>> {
    if opts.stride == 0 || opts.eval_stride == 0 {
        return Err(Error::Config("strides must be positive".into()));
    }
    let tracks = load_corpus(&opts.data_dir)?;
    let train_segs = prepare_segments(&select_subset(tracks.clone(), Subset::Train, opts.split_seed));
    let test_segs = prepare_segments(&select_subset(tracks, Subset::Test, opts.split_seed));
    let mut train = opts.train;
    train.execution = execution;
    let mut points = Vec::new();
    for &(t_obs, t_pred) in &opts.horizons {
        for &n_p in &opts.n_p_values {
            let config = PredictorConfig {
                t_obs,
                t_pred,
                n_p,
                hidden_size: opts.hidden_size,
            };
            config.validate()?;
            let windows: Vec<_> = make_training_windows(&train_segs, &config)
                .into_iter()
                .step_by(opts.stride)
                .collect();
            let eval: Vec<_> = make_training_windows(&test_segs, &config)
                .into_iter()
                .step_by(opts.eval_stride)
                .collect();
            if windows.is_empty() || eval.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "not enough {}-frame windows for t_obs={t_obs} t_pred={t_pred}",
                    config.window_len()
                )));
            }
            let params = PredictorParams::init(&config, train.seed);
            let (params, _) = train_predictor_from(params, &windows, &config, &train)?;
            let mcs = evaluate_mcs(&params, &config, &eval, execution)?;
            points.push(McsPoint {
                t_obs,
                t_pred,
                n_p,
                mcs,
            });
        }
    }
    if let Some(path) = &opts.plot {
        write_bytes(path, mcs_plot_svg(&points).as_bytes())?;
    }
    if let Some(path) = &opts.table {
        let mut buf = Vec::new();
        write_mcs_table(&mut buf, &points)?;
        write_bytes(path, &buf)?;
    }
    Ok(points)
}

// ---------------------------------------------------------------- infer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferOptions {
    pub predictor: Option<PathBuf>,
    pub classifier: PathBuf,
    pub input: PathBuf,
    pub mode: InferMode,
    pub emit_unknowns: bool,
    /// Verdict table; written to standard output when absent.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferSummary {
    pub verdicts: Vec<FrameVerdict>,
    pub tracks: usize,
    pub table: Vec<u8>,
}

pub fn cmd_infer(opts: &InferOptions, execution: Execution) -> Result<InferSummary> {
    let classifier = load_classifier(&opts.classifier)?.params;
    let tracks = load_tracks(&opts.input)?;
    let segments = prepare_segments(&tracks);
    let verdicts = match opts.mode {
        InferMode::Direct => {
            let config = PipelineConfig {
                emit_unknowns: opts.emit_unknowns,
                execution,
                ..PipelineConfig::default()
            };
            run_direct_pipeline(&classifier, &config, &segments)?
        }
        InferMode::Forecast => {
            let path = opts
                .predictor
                .as_ref()
                .ok_or_else(|| Error::Config("forecast inference needs a predictor model".into()))?;
            let saved = load_predictor(path)?;
            let config = PipelineConfig {
                predictor: saved.config,
                emit_unknowns: opts.emit_unknowns,
                execution,
            };
            run_forecast_pipeline(&saved.params, &classifier, &config, &segments)?
        }
    };
    let mut table = Vec::new();
    write_verdicts(&mut table, &verdicts, opts.emit_unknowns)?;
    if let Some(path) = &opts.out {
        write_bytes(path, &table)?;
    }
    Ok(InferSummary {
        verdicts,
        tracks: tracks.len(),
        table,
    })
}

// ---------------------------------------------------------------- gradcheck

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub config: PredictorConfig,
    pub seed: u64,
    /// Perturb one analytic coordinate; the check is then expected to fail.
    pub corrupt: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            config: PredictorConfig {
                t_obs: 4,
                t_pred: 4,
                n_p: 2,
                hidden_size: 8,
            },
            seed: 0,
            corrupt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSummary {
    pub predictor: GradCheckReport,
    pub classifier: GradCheckReport,
    pub passed: bool,
    pub seconds: f64,
}

pub fn cmd_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckSummary> {
    let start = Instant::now();
    let predictor = check_gradients(&opts.config, opts.seed, opts.corrupt)?;
    let classifier = crate::classifier::check_gradients(opts.seed, opts.corrupt);
    let passed = predictor.max_rel_error < GRADCHECK_TOLERANCE
        && classifier.max_rel_error < GRADCHECK_TOLERANCE;
    Ok(GradcheckSummary {
        predictor,
        classifier,
        passed,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------- vectorize

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizeOptions {
    pub input: PathBuf,
    pub out_dir: PathBuf,
}

/// Writes one vector table per track, named `<source>_track<id>.csv`.
pub fn cmd_vectorize(opts: &VectorizeOptions) -> Result<Vec<PathBuf>> {
    let topology = coco_topology();
    let mut out = Vec::new();
    for t in load_tracks(&opts.input)? {
        let seq = vectorize_sequence(&t, &topology);
        let path = opts
            .out_dir
            .join(format!("{}_track{}.csv", t.source_id, t.track_id));
        let mut buf = Vec::new();
        write_vector_table(&seq, &mut buf)?;
        write_bytes(&path, &buf)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MotionKind;

    fn corpus(dir: &Path, count: usize, seed: u64) -> SynthSummary {
        cmd_synth(
            &SynthOptions {
                out_dir: dir.to_path_buf(),
                corpus: CorpusSpec {
                    count,
                    duration: 260,
                    seed,
                    ..CorpusSpec::default()
                },
            },
            Execution::Parallel,
        )
        .unwrap()
    }

    #[test]
    fn synth_balanced_and_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let s = corpus(a.path(), 8, 3);
        corpus(b.path(), 8, 3);
        assert_eq!(s.files.len(), 8);
        for k in MotionKind::ALL {
            assert_eq!(s.per_kind[k.as_str()], 2);
        }
        for f in &s.files {
            let other = b.path().join(POSES_DIR).join(f.file_name().unwrap());
            assert_eq!(std::fs::read(f).unwrap(), std::fs::read(other).unwrap());
        }
        assert_eq!(
            std::fs::read(&s.annotations).unwrap(),
            std::fs::read(b.path().join(ANNOTATIONS_FILE)).unwrap()
        );
    }

    #[test]
    fn corpus_parses_back_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec {
            count: 4,
            duration: 260,
            seed: 9,
            ..CorpusSpec::default()
        };
        cmd_synth(
            &SynthOptions {
                out_dir: dir.path().to_path_buf(),
                corpus: spec.clone(),
            },
            Execution::Sequential,
        )
        .unwrap();
        let originals = synth_corpus(&spec, Execution::Sequential).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded.len(), originals.len());
        for v in &originals {
            let back = loaded.iter().find(|t| t.source_id == v.sequence.source_id).unwrap();
            assert_eq!(back, &v.sequence);
        }
    }

    #[test]
    fn subsets_partition_sources() {
        let dir = tempfile::tempdir().unwrap();
        corpus(dir.path(), 10, 1);
        let all = load_corpus(dir.path()).unwrap();
        let train = select_subset(all.clone(), Subset::Train, 4);
        let test = select_subset(all.clone(), Subset::Test, 4);
        assert_eq!((train.len(), test.len()), (7, 3));
        assert!(train.iter().all(|t| !test.iter().any(|u| u.source_id == t.source_id)));
    }

    #[test]
    fn resume_refuses_other_config() {
        let dir = tempfile::tempdir().unwrap();
        corpus(dir.path(), 4, 2);
        let config = PredictorConfig {
            t_obs: 10,
            t_pred: 10,
            n_p: 5,
            hidden_size: 4,
        };
        let mut opts = TrainPredictorOptions {
            data: DataSelection {
                data_dir: dir.path().to_path_buf(),
                annotations: None,
                subset: Subset::All,
                split_seed: 0,
            },
            out: dir.path().join("m.json"),
            config,
            train: TrainOptions {
                epochs: 1,
                batch_size: 1,
                max_steps: Some(2),
                ..TrainOptions::default()
            },
            stride: 50,
            resume: None,
            overfit: false,
        };
        let s = cmd_train_predictor(&opts, Execution::Parallel).unwrap();
        assert_eq!(s.curve.steps.len(), 2);
        assert!(sibling(&opts.out, "epochs.csv").exists());
        opts.resume = Some(opts.out.clone());
        opts.out = dir.path().join("m2.json");
        cmd_train_predictor(&opts, Execution::Parallel).unwrap();
        opts.config.hidden_size = 5;
        assert!(matches!(
            cmd_train_predictor(&opts, Execution::Parallel),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn classifier_needs_both_classes() {
        let dir = tempfile::tempdir().unwrap();
        cmd_synth(
            &SynthOptions {
                out_dir: dir.path().to_path_buf(),
                corpus: CorpusSpec {
                    count: 2,
                    duration: 60,
                    kinds: vec![MotionKind::UprightIdle],
                    ..CorpusSpec::default()
                },
            },
            Execution::Parallel,
        )
        .unwrap();
        let opts = TrainClassifierOptions {
            data: DataSelection {
                data_dir: dir.path().to_path_buf(),
                annotations: None,
                subset: Subset::All,
                split_seed: 0,
            },
            out: dir.path().join("c.json"),
            principle: AnnotationPrinciple::P3,
            train: TrainOptions {
                epochs: 1,
                ..TrainOptions::default()
            },
        };
        assert!(matches!(
            cmd_train_classifier(&opts, Execution::Parallel),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gradcheck_passes_and_detects_corruption() {
        let ok = cmd_gradcheck(&GradcheckOptions::default()).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = cmd_gradcheck(&GradcheckOptions {
            corrupt: true,
            ..GradcheckOptions::default()
        })
        .unwrap();
        assert!(!bad.passed);
    }
}
