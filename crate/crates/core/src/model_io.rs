//! Versioned JSON model files.
//!
//! A file carries its kind, the seed and hyperparameters it was trained
//! with, and every parameter tensor by name and shape in a fixed order.
//! Floats are written with round-trip precision, so a reloaded model is
//! bit-identical to the saved one.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierParams;
use crate::dataset::AnnotationPrinciple;
use crate::error::{Error, Result};
use crate::nn::{LinearParams, LstmCellParams, ParamSet};
use crate::predictor::{PredictorConfig, PredictorParams, TrainOptions};

pub const FORMAT: &str = "fallpred-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Predictor,
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PredictorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<TrainOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principle: Option<AnnotationPrinciple>,
    pub tensors: Vec<Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedPredictor {
    pub params: PredictorParams,
    pub config: PredictorConfig,
    pub seed: u64,
    pub hyperparameters: Option<TrainOptions>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedClassifier {
    pub params: ClassifierParams,
    pub seed: u64,
    pub hyperparameters: Option<TrainOptions>,
    pub principle: Option<AnnotationPrinciple>,
}

type Layout = Vec<(String, Vec<usize>)>;

fn lstm_layout(prefix: &str, cell: &LstmCellParams, out: &mut Layout) {
    let (h, cols) = (cell.w_i.rows, cell.w_i.cols);
    for w in ["w_i", "w_f", "w_o", "w_c"] {
        out.push((format!("{prefix}.{w}"), vec![h, cols]));
    }
    for b in ["b_i", "b_f", "b_o", "b_c"] {
        out.push((format!("{prefix}.{b}"), vec![h]));
    }
}

fn linear_layout(prefix: &str, l: &LinearParams, out: &mut Layout) {
    out.push((format!("{prefix}.w"), vec![l.w.rows, l.w.cols]));
    out.push((format!("{prefix}.b"), vec![l.b.len()]));
}

fn predictor_layout(p: &PredictorParams) -> Layout {
    let mut out = Vec::new();
    lstm_layout("encoder", &p.encoder, &mut out);
    lstm_layout("decoder", &p.decoder, &mut out);
    linear_layout("out_proj", &p.out_proj, &mut out);
    out
}

fn classifier_layout(p: &ClassifierParams) -> Layout {
    let mut out = Vec::new();
    for (k, l) in p.layers.iter().enumerate() {
        linear_layout(&format!("layers.{k}"), l, &mut out);
    }
    out
}

fn to_tensors<P: ParamSet>(params: &P, layout: Layout) -> Result<Vec<Tensor>> {
    if !params.all_finite() {
        return Err(Error::Model("refusing to save non-finite weights".into()));
    }
    Ok(layout
        .into_iter()
        .zip(params.tensors())
        .map(|((name, shape), data)| Tensor {
            name,
            shape,
            data: data.to_vec(),
        })
        .collect())
}

/// Copies `tensors` into `template`, which fixes the expected names,
/// shapes and order.
fn fill<P: ParamSet>(mut template: P, layout: Layout, tensors: &[Tensor]) -> Result<P> {
    if tensors.len() != layout.len() {
        return Err(Error::Model(format!(
            "expected {} tensors, found {}",
            layout.len(),
            tensors.len()
        )));
    }
    for (((name, shape), dst), t) in layout.iter().zip(template.tensors_mut()).zip(tensors) {
        if &t.name != name {
            return Err(Error::Model(format!("expected tensor {name}, found {}", t.name)));
        }
        if &t.shape != shape || t.data.len() != dst.len() {
            return Err(Error::Model(format!(
                "tensor {name} has shape {:?} with {} values, expected {shape:?}",
                t.shape,
                t.data.len()
            )));
        }
        if !t.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Model(format!("tensor {name} holds non-finite values")));
        }
        dst.copy_from_slice(&t.data);
    }
    Ok(template)
}

fn check_header(file: &ModelFile, kind: ModelKind) -> Result<()> {
    if file.format != FORMAT {
        return Err(Error::Model(format!("not a model file (format {:?})", file.format)));
    }
    if file.version != VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {} (expected {VERSION})",
            file.version
        )));
    }
    if file.kind != kind {
        return Err(Error::Model(format!(
            "expected a {kind:?} model, found {:?}",
            file.kind
        )));
    }
    Ok(())
}

pub fn predictor_file(saved: &SavedPredictor) -> Result<ModelFile> {
    saved.params.check_config(&saved.config)?;
    Ok(ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        kind: ModelKind::Predictor,
        seed: saved.seed,
        config: Some(saved.config),
        hyperparameters: saved.hyperparameters,
        principle: None,
        tensors: to_tensors(&saved.params, predictor_layout(&saved.params))?,
    })
}

pub fn predictor_from_file(file: &ModelFile) -> Result<SavedPredictor> {
    check_header(file, ModelKind::Predictor)?;
    let config = file
        .config
        .ok_or_else(|| Error::Model("predictor file without config".into()))?;
    config.validate()?;
    let template = PredictorParams::zeros(&config);
    let layout = predictor_layout(&template);
    Ok(SavedPredictor {
        params: fill(template, layout, &file.tensors)?,
        config,
        seed: file.seed,
        hyperparameters: file.hyperparameters,
    })
}

pub fn classifier_file(saved: &SavedClassifier) -> Result<ModelFile> {
    saved.params.validate()?;
    Ok(ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        kind: ModelKind::Classifier,
        seed: saved.seed,
        config: None,
        hyperparameters: saved.hyperparameters,
        principle: saved.principle,
        tensors: to_tensors(&saved.params, classifier_layout(&saved.params))?,
    })
}

pub fn classifier_from_file(file: &ModelFile) -> Result<SavedClassifier> {
    check_header(file, ModelKind::Classifier)?;
    let template = ClassifierParams::zeros();
    let layout = classifier_layout(&template);
    Ok(SavedClassifier {
        params: fill(template, layout, &file.tensors)?,
        seed: file.seed,
        hyperparameters: file.hyperparameters,
        principle: file.principle,
    })
}

fn write_file(path: &Path, file: &ModelFile) -> Result<()> {
    let bytes = serde_json::to_vec(file)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn save_predictor(path: &Path, saved: &SavedPredictor) -> Result<()> {
    write_file(path, &predictor_file(saved)?)
}

pub fn load_predictor(path: &Path) -> Result<SavedPredictor> {
    predictor_from_file(&read_file(path)?)
}

pub fn save_classifier(path: &Path, saved: &SavedClassifier) -> Result<()> {
    write_file(path, &classifier_file(saved)?)
}

pub fn load_classifier(path: &Path) -> Result<SavedClassifier> {
    classifier_from_file(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_predictor() -> SavedPredictor {
        let config = PredictorConfig {
            t_obs: 4,
            t_pred: 6,
            n_p: 2,
            hidden_size: 5,
        };
        SavedPredictor {
            params: PredictorParams::init(&config, 9),
            config,
            seed: 9,
            hyperparameters: Some(TrainOptions::default()),
        }
    }

    fn bits<P: ParamSet>(p: &P) -> Vec<u64> {
        p.tensors().iter().flat_map(|t| t.iter().map(|x| x.to_bits())).collect()
    }

    #[test]
    fn predictor_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let saved = small_predictor();
        save_predictor(&path, &saved).unwrap();
        let back = load_predictor(&path).unwrap();
        assert_eq!(bits(&back.params), bits(&saved.params));
        assert_eq!(back, saved);
        // saving again yields the same bytes
        let first = std::fs::read(&path).unwrap();
        save_predictor(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn classifier_roundtrip_is_bit_exact() {
        let saved = SavedClassifier {
            params: ClassifierParams::init(3),
            seed: 3,
            hyperparameters: None,
            principle: Some(AnnotationPrinciple::P3),
        };
        let file = classifier_file(&saved).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        let back = classifier_from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(bits(&back.params), bits(&saved.params));
        assert_eq!(file.tensors[0].name, "layers.0.w");
        assert_eq!(file.tensors[0].shape, vec![96, 24]);
    }

    #[test]
    fn rejects_mismatches() {
        let mut file = predictor_file(&small_predictor()).unwrap();
        assert!(classifier_from_file(&file).is_err());
        file.tensors[3].data.pop();
        assert!(predictor_from_file(&file).is_err());

        let mut file = predictor_file(&small_predictor()).unwrap();
        file.version = 2;
        assert!(predictor_from_file(&file).is_err());

        let mut file = predictor_file(&small_predictor()).unwrap();
        file.tensors.swap(0, 1);
        assert!(predictor_from_file(&file).is_err());
    }

    #[test]
    fn tensor_names_in_declared_order() {
        let file = predictor_file(&small_predictor()).unwrap();
        let names: Vec<&str> = file.tensors.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(&names[..2], &["encoder.w_i", "encoder.w_f"]);
        assert_eq!(names.last(), Some(&"out_proj.b"));
        assert_eq!(names.len(), 18);
    }
}
