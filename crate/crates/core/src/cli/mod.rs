//! Command-line surface. Arguments and an optional TOML config file are
//! resolved into an [`Invocation`], which is executed and recorded in a
//! [`RunManifest`]; `replay` re-executes a recorded invocation.

pub mod commands;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use commands::*;

use crate::dataset::{AnnotationPrinciple, CorpusSpec, MotionKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::predictor::{PredictorConfig, TrainOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
/// Reserved by the argument parser for usage errors.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;
pub const EXIT_CHECK_FAILED: u8 = 5;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Format { .. } | Error::Json(_) | Error::Csv(_) => EXIT_PARSE,
        Error::Config(_) | Error::Annotation(_) | Error::InvalidInput(_) => EXIT_CONFIG,
        Error::Nn(_) | Error::Model(_) | Error::Io { .. } => EXIT_FAILURE,
    }
}

pub const DATA_DIR_ENV: &str = "FALLPRED_DATA_DIR";

#[derive(Parser, Debug)]
#[command(name = "fallpred", version, about = "Fall forecasting from 2D body keypoints")]
pub struct Cli {
    /// TOML file with defaults for any flag (keys as flag names); flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Use a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic keypoint corpus with annotations.
    Synth(SynthArgs),
    /// Train the sequence-to-sequence pose forecaster.
    TrainPredictor(TrainPredictorArgs),
    /// Train the fall classifier on annotated frames.
    TrainClassifier(TrainClassifierArgs),
    /// Score direct and/or forecast verdicts against annotations.
    Eval(EvalArgs),
    /// Train and score forecasters over a grid of horizons and package sizes.
    McsSweep(McsSweepArgs),
    /// Emit per-frame verdicts for one keypoint file.
    Infer(InferArgs),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Dump pose vectors of every track in a keypoint file.
    Vectorize(VectorizeArgs),
    /// Re-run the invocation recorded in a manifest.
    Replay {
        #[arg(value_name = "MANIFEST")]
        path: PathBuf,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Directory with `poses/*.json` and `annotations.csv`.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Side of the 7:3 video split to use.
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub t_obs: Option<usize>,
    #[arg(long)]
    pub t_pred: Option<usize>,
    /// Pose vectors per package.
    #[arg(long = "np")]
    pub np: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    /// Frames per sequence.
    #[arg(long)]
    pub duration: Option<usize>,
    /// Pixel noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub occlusion: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated motion kinds, assigned round-robin.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TrainPredictorArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep every n-th training window.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Continue from an existing model with the same configuration.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Fit the first window alone, one step per update.
    #[arg(long)]
    pub overfit: bool,
}

#[derive(Args, Debug)]
pub struct TrainClassifierArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame annotation principle; p2 also labels the falling frames.
    #[arg(long)]
    pub principle: Option<AnnotationPrinciple>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub predictor: Option<PathBuf>,
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<EvalMode>,
    #[arg(long)]
    pub principle: Option<AnnotationPrinciple>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Verdict table path.
    #[arg(long)]
    pub verdicts: Option<PathBuf>,
    #[arg(long)]
    pub emit_unknowns: bool,
}

#[derive(Args, Debug)]
pub struct McsSweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Comma-separated `t_obs:t_pred` pairs.
    #[arg(long, value_delimiter = ',', default_value = "25:50,25:25,10:50")]
    pub horizons: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub np_values: Vec<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub eval_stride: usize,
    /// SVG plot of MCS against n_p.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    /// Keypoint file.
    pub input: PathBuf,
    #[arg(long)]
    pub predictor: Option<PathBuf>,
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<InferMode>,
    #[arg(long)]
    pub emit_unknowns: bool,
    /// Verdict table path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Perturb one analytic gradient coordinate; the check must then fail.
    #[arg(long)]
    pub corrupt: bool,
}

#[derive(Args, Debug)]
pub struct VectorizeArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Values from a `--config` file. Keys are the flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub subset: Option<Subset>,
    pub split_seed: Option<u64>,
    pub t_obs: Option<usize>,
    pub t_pred: Option<usize>,
    pub np: Option<usize>,
    pub hidden: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub max_steps: Option<usize>,
    pub stride: Option<usize>,
    pub principle: Option<AnnotationPrinciple>,
    pub mode: Option<EvalMode>,
    pub emit_unknowns: Option<bool>,
    pub count: Option<usize>,
    pub duration: Option<usize>,
    pub noise: Option<f64>,
    pub occlusion: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// One fully resolved command; stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "options", rename_all = "kebab-case")]
pub enum Invocation {
    Synth(SynthOptions),
    TrainPredictor(TrainPredictorOptions),
    TrainClassifier(TrainClassifierOptions),
    Eval(EvalOptions),
    McsSweep(McsSweepOptions),
    Infer(InferOptions),
    Gradcheck(GradcheckOptions),
    Vectorize(VectorizeOptions),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub invocation: Invocation,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Debug)]
pub struct Outcome {
    /// Human-readable summary.
    pub message: String,
    /// False when a check ran and failed.
    pub passed: bool,
    /// Payload for standard output (verdict tables without `--out`).
    pub stdout: Option<Vec<u8>>,
    pub manifest: RunManifest,
}

fn data_selection(a: DataArgs, f: &FileConfig, default_subset: Subset) -> Result<DataSelection> {
    let data_dir = a
        .data_dir
        .or_else(|| f.data_dir.clone())
        .ok_or_else(|| Error::Config(format!("no data directory: pass --data-dir or set {DATA_DIR_ENV}")))?;
    Ok(DataSelection {
        data_dir,
        annotations: a.annotations.or_else(|| f.annotations.clone()),
        subset: a.subset.or(f.subset).unwrap_or(default_subset),
        split_seed: a.split_seed.or(f.split_seed).unwrap_or(0),
    })
}

fn predictor_config(a: &ModelArgs, f: &FileConfig, default: PredictorConfig) -> PredictorConfig {
    PredictorConfig {
        t_obs: a.t_obs.or(f.t_obs).unwrap_or(default.t_obs),
        t_pred: a.t_pred.or(f.t_pred).unwrap_or(default.t_pred),
        n_p: a.np.or(f.np).unwrap_or(default.n_p),
        hidden_size: a.hidden.or(f.hidden).unwrap_or(default.hidden_size),
    }
}

fn train_options(a: &TrainArgs, f: &FileConfig, default_epochs: usize) -> TrainOptions {
    let d = TrainOptions::default();
    let mut t = TrainOptions {
        epochs: a.epochs.or(f.epochs).unwrap_or(default_epochs),
        batch_size: a.batch.or(f.batch).unwrap_or(d.batch_size),
        seed: a.seed.or(f.seed).unwrap_or(d.seed),
        max_steps: a.max_steps.or(f.max_steps),
        ..d
    };
    t.adam.lr = a.lr.or(f.lr).unwrap_or(d.adam.lr);
    t
}

pub const CLASSIFIER_EPOCHS: usize = 10;

/// Resolves parsed arguments against the config file and defaults.
pub fn resolve(command: Command, f: &FileConfig) -> Result<Invocation> {
    Ok(match command {
        Command::Synth(a) => {
            let d = CorpusSpec::default();
            let kinds = if a.kinds.is_empty() {
                d.kinds
            } else {
                a.kinds.iter().map(|k| k.parse()).collect::<Result<Vec<MotionKind>>>()?
            };
            Invocation::Synth(SynthOptions {
                out_dir: a.out,
                corpus: CorpusSpec {
                    count: a.count.or(f.count).unwrap_or(d.count),
                    duration: a.duration.or(f.duration).unwrap_or(d.duration),
                    noise_std: a.noise.or(f.noise).unwrap_or(d.noise_std),
                    occlusion_rate: a.occlusion.or(f.occlusion).unwrap_or(d.occlusion_rate),
                    seed: a.seed.or(f.seed).unwrap_or(d.seed),
                    kinds,
                },
            })
        }
        Command::TrainPredictor(a) => Invocation::TrainPredictor(TrainPredictorOptions {
            config: predictor_config(&a.model, f, PredictorConfig::default()),
            train: train_options(&a.train, f, TrainOptions::default().epochs),
            data: data_selection(a.data, f, Subset::Train)?,
            out: a.out,
            stride: a.stride.or(f.stride).unwrap_or(1),
            resume: a.resume,
            overfit: a.overfit,
        }),
        Command::TrainClassifier(a) => Invocation::TrainClassifier(TrainClassifierOptions {
            train: train_options(&a.train, f, CLASSIFIER_EPOCHS),
            data: data_selection(a.data, f, Subset::Train)?,
            out: a.out,
            principle: a.principle.or(f.principle).unwrap_or_default(),
        }),
        Command::Eval(a) => Invocation::Eval(EvalOptions {
            data: data_selection(a.data, f, Subset::Test)?,
            predictor: a.predictor,
            classifier: a.classifier,
            mode: a.mode.or(f.mode).unwrap_or_default(),
            principle: a.principle.or(f.principle).unwrap_or_default(),
            report: a.report,
            verdicts: a.verdicts,
            emit_unknowns: a.emit_unknowns || f.emit_unknowns.unwrap_or(false),
        }),
        Command::McsSweep(a) => {
            let horizons = a
                .horizons
                .iter()
                .map(|h| parse_horizon(h))
                .collect::<Result<Vec<_>>>()?;
            let data = data_selection(a.data, f, Subset::Train)?;
            Invocation::McsSweep(McsSweepOptions {
                data_dir: data.data_dir,
                split_seed: data.split_seed,
                horizons,
                n_p_values: a.np_values,
                hidden_size: a.hidden.or(f.hidden).unwrap_or(PredictorConfig::default().hidden_size),
                train: train_options(&a.train, f, TrainOptions::default().epochs),
                stride: a.stride.or(f.stride).unwrap_or(1),
                eval_stride: a.eval_stride,
                plot: a.plot,
                table: a.table,
            })
        }
        Command::Infer(a) => Invocation::Infer(InferOptions {
            predictor: a.predictor,
            classifier: a.classifier,
            input: a.input,
            mode: a.mode.unwrap_or_default(),
            emit_unknowns: a.emit_unknowns || f.emit_unknowns.unwrap_or(false),
            out: a.out,
        }),
        Command::Gradcheck(a) => {
            let d = GradcheckOptions::default();
            Invocation::Gradcheck(GradcheckOptions {
                config: predictor_config(&a.model, f, d.config),
                seed: a.seed.or(f.seed).unwrap_or(d.seed),
                corrupt: a.corrupt,
            })
        }
        Command::Vectorize(a) => Invocation::Vectorize(VectorizeOptions {
            input: a.input,
            out_dir: a.out,
        }),
        Command::Replay { path } => RunManifest::load(&path)?.invocation,
    })
}

fn parse_horizon(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("horizon {s:?} is not t_obs:t_pred"));
    let (o, p) = s.split_once(':').ok_or_else(bad)?;
    Ok((o.trim().parse().map_err(|_| bad())?, p.trim().parse().map_err(|_| bad())?))
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Synth(_) => "synth",
            Invocation::TrainPredictor(_) => "train-predictor",
            Invocation::TrainClassifier(_) => "train-classifier",
            Invocation::Eval(_) => "eval",
            Invocation::McsSweep(_) => "mcs-sweep",
            Invocation::Infer(_) => "infer",
            Invocation::Gradcheck(_) => "gradcheck",
            Invocation::Vectorize(_) => "vectorize",
        }
    }

    /// Manifest location when none is given explicitly.
    pub fn default_manifest_path(&self) -> Option<PathBuf> {
        match self {
            Invocation::Synth(o) => Some(o.out_dir.join("manifest.json")),
            Invocation::TrainPredictor(o) => Some(sibling(&o.out, "manifest.json")),
            Invocation::TrainClassifier(o) => Some(sibling(&o.out, "manifest.json")),
            Invocation::Eval(o) => o.report.as_ref().or(o.verdicts.as_ref()).map(|p| sibling(p, "manifest.json")),
            Invocation::McsSweep(o) => o.plot.as_ref().or(o.table.as_ref()).map(|p| sibling(p, "manifest.json")),
            Invocation::Infer(o) => o.out.as_ref().map(|p| sibling(p, "manifest.json")),
            Invocation::Gradcheck(_) => None,
            Invocation::Vectorize(o) => Some(o.out_dir.join("manifest.json")),
        }
    }

    fn seeds(&self) -> BTreeMap<String, u64> {
        let mut s = BTreeMap::new();
        match self {
            Invocation::Synth(o) => {
                s.insert("corpus".into(), o.corpus.seed);
            }
            Invocation::TrainPredictor(o) => {
                s.insert("train".into(), o.train.seed);
                s.insert("split".into(), o.data.split_seed);
            }
            Invocation::TrainClassifier(o) => {
                s.insert("train".into(), o.train.seed);
                s.insert("split".into(), o.data.split_seed);
            }
            Invocation::Eval(o) => {
                s.insert("split".into(), o.data.split_seed);
            }
            Invocation::McsSweep(o) => {
                s.insert("train".into(), o.train.seed);
                s.insert("split".into(), o.split_seed);
            }
            Invocation::Gradcheck(o) => {
                s.insert("init".into(), o.seed);
            }
            Invocation::Infer(_) | Invocation::Vectorize(_) => {}
        }
        s
    }
}

fn fmt_curve(s: &mut String, summary: &TrainSummary) {
    let _ = writeln!(
        s,
        "trained on {} samples: {} steps, {} epochs, final loss {:.6e}",
        summary.samples,
        summary.curve.steps.len(),
        summary.curve.epochs.len(),
        summary.final_loss
    );
    let _ = writeln!(s, "model: {}", summary.model.display());
    for t in &summary.tables {
        let _ = writeln!(s, "loss table: {}", t.display());
    }
}

/// Runs an invocation and writes its manifest to `manifest_path`, or to
/// the invocation's default location when `None`.
pub fn execute(invocation: &Invocation, execution: Execution, manifest_path: Option<PathBuf>) -> Result<Outcome> {
    let start = Instant::now();
    let mut message = String::new();
    let mut passed = true;
    let mut stdout = None;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();

    match invocation {
        Invocation::Synth(o) => {
            let s = cmd_synth(o, execution)?;
            let _ = writeln!(message, "wrote {} sequences to {}", s.files.len(), o.out_dir.display());
            for (k, n) in &s.per_kind {
                let _ = writeln!(message, "  {k}: {n}");
            }
            outputs.extend(s.files);
            outputs.push(s.annotations);
        }
        Invocation::TrainPredictor(o) => {
            inputs.push(o.data.data_dir.clone());
            inputs.extend(o.resume.clone());
            let s = cmd_train_predictor(o, execution)?;
            fmt_curve(&mut message, &s);
            outputs.push(s.model.clone());
            outputs.extend(s.tables.iter().cloned());
        }
        Invocation::TrainClassifier(o) => {
            inputs.push(o.data.data_dir.clone());
            let s = cmd_train_classifier(o, execution)?;
            fmt_curve(&mut message, &s);
            outputs.push(s.model.clone());
            outputs.extend(s.tables.iter().cloned());
        }
        Invocation::Eval(o) => {
            inputs.push(o.data.data_dir.clone());
            inputs.push(o.classifier.clone());
            inputs.extend(o.predictor.clone());
            let r = cmd_eval(o, execution)?;
            message.push_str(&r.table);
            if let Some(e) = &r.early_detection {
                let _ = writeln!(
                    message,
                    "early detection: {}/{} fall videos flagged by S_gu ({:.1}%)",
                    e.detected,
                    e.fall_videos,
                    100.0 * e.rate
                );
            }
            outputs.extend(o.report.clone());
            outputs.extend(o.verdicts.clone());
        }
        Invocation::McsSweep(o) => {
            inputs.push(o.data_dir.clone());
            let points = cmd_mcs_sweep(o, execution)?;
            let _ = writeln!(message, "t_obs t_pred n_p    MCS");
            for p in &points {
                let _ = writeln!(message, "{:>5} {:>6} {:>3} {:.4}", p.t_obs, p.t_pred, p.n_p, p.mcs);
            }
            outputs.extend(o.plot.clone());
            outputs.extend(o.table.clone());
        }
        Invocation::Infer(o) => {
            inputs.push(o.input.clone());
            inputs.push(o.classifier.clone());
            inputs.extend(o.predictor.clone());
            let s = cmd_infer(o, execution)?;
            let _ = writeln!(message, "{} verdicts for {} tracks", s.verdicts.len(), s.tracks);
            match &o.out {
                Some(p) => outputs.push(p.clone()),
                None => stdout = Some(s.table),
            }
        }
        Invocation::Gradcheck(o) => {
            let s = cmd_gradcheck(o)?;
            passed = s.passed;
            let _ = writeln!(
                message,
                "predictor:  max relative error {:.3e} over {} parameters",
                s.predictor.max_rel_error, s.predictor.checked
            );
            let _ = writeln!(
                message,
                "classifier: max relative error {:.3e} over {} parameters",
                s.classifier.max_rel_error, s.classifier.checked
            );
            let _ = writeln!(
                message,
                "{} (tolerance {GRADCHECK_TOLERANCE:e}, {:.1} s)",
                if s.passed { "PASS" } else { "FAIL" },
                s.seconds
            );
        }
        Invocation::Vectorize(o) => {
            inputs.push(o.input.clone());
            let files = cmd_vectorize(o)?;
            let _ = writeln!(message, "wrote {} vector tables", files.len());
            outputs.extend(files);
        }
    }

    let manifest = RunManifest {
        tool: "fallpred".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        invocation: invocation.clone(),
        seeds: invocation.seeds(),
        inputs,
        outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(path) = manifest_path.or_else(|| invocation.default_manifest_path()) {
        commands::write_bytes(&path, &serde_json::to_vec_pretty(&manifest)?)?;
        let _ = writeln!(message, "manifest: {}", path.display());
    }
    Ok(Outcome {
        message,
        passed,
        stdout,
        manifest,
    })
}

/// Parses nothing itself: resolves `cli` against its config file and runs
/// it. A replay only writes a manifest when `--manifest` is given.
pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let replay = matches!(cli.command, Command::Replay { .. });
    let invocation = resolve(cli.command, &file)?;
    if replay && cli.manifest.is_none() {
        let dir = std::env::temp_dir().join(format!("fallpred-replay-{}", std::process::id()));
        let out = execute(&invocation, execution, Some(dir.join("manifest.json")));
        let _ = std::fs::remove_dir_all(&dir);
        return out;
    }
    execute(&invocation, execution, cli.manifest)
}
