//! Binary provenance classifiers behind one interface, their training
//! driver, prediction and on-disk artifacts.

mod linear;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linear::{LinearBackend, LinearModel};

use crate::corpus::Corpus;
use crate::extractor::{apply_config, ExtractError, PreprocessConfig, RenameMap};
use crate::snippet::{Origin, Snippet};
use crate::split::{DatasetSplit, Part};
use crate::tokenizer::DEFAULT_MAX_LEN;

/// Written into every artifact; restoring a different tag is refused.
pub const ARTIFACT_VERSION: &str = "codeprov-model/1";
pub const META_FILE: &str = "meta.json";
pub const CLASS_ORDER: [Origin; 2] = [Origin::Human, Origin::Chatgpt];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Encoder,
    Linear,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Encoder => "encoder",
            BackendKind::Linear => "linear",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "encoder" => Ok(BackendKind::Encoder),
            "linear" => Ok(BackendKind::Linear),
            other => Err(format!("unknown backend {other:?} (expected encoder or linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    /// Fine-tuning defaults for the encoder backend.
    fn default() -> Self {
        Hyperparams {
            epochs: 5,
            batch_size: 8,
            learning_rate: 2e-5,
            warmup_fraction: 0.1,
            weight_decay: 0.01,
            max_len: DEFAULT_MAX_LEN,
            seed: 42,
        }
    }
}

impl Hyperparams {
    /// Defaults per backend; the linear model trains from zero and needs a
    /// larger step and more epochs than a fine-tune.
    pub fn defaults_for(backend: BackendKind) -> Self {
        match backend {
            BackendKind::Encoder => Hyperparams::default(),
            BackendKind::Linear => Hyperparams { epochs: 20, learning_rate: 0.1, weight_decay: 0.01, ..Hyperparams::default() },
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |what: &str| Err(ClassifierError::InvalidHyperparams(what.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must lie in [0, 1]");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be nonnegative");
        }
        if self.max_len < 2 {
            return bad("max_len must leave room for the two sentinels");
        }
        Ok(())
    }
}

/// Linear warmup to the peak rate, then linear decay to zero.
pub fn scheduled_rate(step: usize, total_steps: usize, hp: &Hyperparams) -> f64 {
    let warmup = (hp.warmup_fraction * total_steps as f64).round() as usize;
    if step < warmup {
        hp.learning_rate * (step + 1) as f64 / warmup as f64
    } else {
        let remaining = total_steps.saturating_sub(warmup).max(1);
        hp.learning_rate * total_steps.saturating_sub(step) as f64 / remaining as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub snippet_id: String,
    pub label: Origin,
    /// Probability of `label`, never below 0.5.
    pub score: f64,
}

impl Prediction {
    /// Argmax over `[p_human, p_chatgpt]`; an exact tie goes to human.
    pub fn from_probabilities(snippet_id: &str, probs: [f64; 2]) -> Self {
        let label = if probs[1] > probs[0] { Origin::Chatgpt } else { Origin::Human };
        Prediction { snippet_id: snippet_id.to_string(), label, score: probs[label.index()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

/// Index of the epoch kept: best validation accuracy, earliest on ties;
/// the final epoch when there is no validation data.
pub fn select_epoch(history: &[EpochRecord]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, rec) in history.iter().enumerate() {
        let Some(acc) = rec.validation_accuracy else {
            return history.len().saturating_sub(1);
        };
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((i, acc));
        }
    }
    best.map_or(0, |(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub selected_epoch: usize,
    pub train_size: usize,
    pub validation_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub backend: BackendKind,
    pub version: String,
    pub class_order: [Origin; 2],
    pub hyperparams: Hyperparams,
    pub preprocess_config: String,
    pub preprocess: PreprocessConfig,
    pub tokenizer: String,
    pub training: TrainingLog,
    /// Backend-specific settings, such as the encoder checkpoint.
    #[serde(default)]
    pub backend_settings: serde_json::Value,
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training set contains only {0} snippets")]
    SingleClass(Origin),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(transparent)]
    Preprocess(#[from] ExtractError),
    #[error("snippet {0} is not in the corpus")]
    UnknownSnippet(String),
    #[error("no model artifact at {0}")]
    MissingArtifact(PathBuf),
    #[error("artifact version {found:?} is not supported (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error("artifact was written by the {found} backend, not {expected}")]
    BackendMismatch { found: BackendKind, expected: BackendKind },
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error("{0}")]
    Backend(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ClassifierError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ClassifierError::Io { path: path.to_path_buf(), source }
    }
}

/// A trained, immutable model.
pub trait Classifier: Send + Sync {
    fn tokenizer_identity(&self) -> String;

    /// `[p_human, p_chatgpt]` for each already preprocessed text.
    fn probabilities(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>, ClassifierError>;

    /// Writes the weights into `dir`; `meta.json` is written by the caller.
    fn save(&self, dir: &Path) -> Result<(), ClassifierError>;

    /// Backend details worth recording in the artifact header.
    fn settings(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

/// A training algorithm and artifact loader.
pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn fit(
        &self,
        train: &[&Snippet],
        validation: &[&Snippet],
        hp: &Hyperparams,
    ) -> Result<(Box<dyn Classifier>, TrainingLog), ClassifierError>;

    fn load(&self, dir: &Path, meta: &ModelMeta) -> Result<Box<dyn Classifier>, ClassifierError>;
}

#[derive(Clone)]
pub struct ModelHandle {
    model: Arc<dyn Classifier>,
    meta: ModelMeta,
    artifact_path: Option<PathBuf>,
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle").field("meta", &self.meta).field("artifact_path", &self.artifact_path).finish()
    }
}

impl ModelHandle {
    pub fn backend(&self) -> BackendKind {
        self.meta.backend
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn class_order(&self) -> [Origin; 2] {
        self.meta.class_order
    }

    pub fn artifact_path(&self) -> Option<&Path> {
        self.artifact_path.as_deref()
    }

    pub fn classifier(&self) -> &dyn Classifier {
        self.model.as_ref()
    }

    /// Predictions for snippets that are already preprocessed, in input order.
    pub fn predict_prepared(&self, snippets: &[&Snippet]) -> Result<Vec<Prediction>, ClassifierError> {
        let texts: Vec<&str> = snippets.iter().map(|s| s.text()).collect();
        let probs = self.model.probabilities(&texts)?;
        Ok(snippets.iter().zip(probs).map(|(s, p)| Prediction::from_probabilities(s.id(), p)).collect())
    }
}

/// Applies `config` to every snippet in parallel, keeping input order.
pub fn preprocess_all(snippets: &[&Snippet], config: &PreprocessConfig, rename_map: Option<&RenameMap>) -> Result<Vec<Snippet>, ExtractError> {
    snippets.par_iter().map(|s| apply_config(s, config, rename_map)).collect()
}

/// Trains on the train part of `split` and selects an epoch on its
/// validation part, after preprocessing both with `config`.
pub fn train(
    backend: &dyn Backend,
    split: &DatasetSplit,
    corpus: &Corpus,
    config: &PreprocessConfig,
    rename_map: Option<&RenameMap>,
    hp: &Hyperparams,
) -> Result<ModelHandle, ClassifierError> {
    hp.validate()?;
    let part = |p: Part| -> Result<Vec<&Snippet>, ClassifierError> {
        split.part(p).iter().map(|id| corpus.get(id).ok_or_else(|| ClassifierError::UnknownSnippet(id.clone()))).collect()
    };
    let train_raw = part(Part::Train)?;
    if train_raw.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    for origin in Origin::ALL {
        if train_raw.iter().all(|s| s.origin() != origin) {
            return Err(ClassifierError::SingleClass(origin.other()));
        }
    }
    let train_set = preprocess_all(&train_raw, config, rename_map)?;
    let validation_set = preprocess_all(&part(Part::Validation)?, config, rename_map)?;
    let train_refs: Vec<&Snippet> = train_set.iter().collect();
    let validation_refs: Vec<&Snippet> = validation_set.iter().collect();
    let (model, training) = backend.fit(&train_refs, &validation_refs, hp)?;
    let meta = ModelMeta {
        backend: backend.kind(),
        version: ARTIFACT_VERSION.to_string(),
        class_order: CLASS_ORDER,
        hyperparams: *hp,
        preprocess_config: config.name.clone(),
        preprocess: config.clone(),
        tokenizer: model.tokenizer_identity(),
        training,
        backend_settings: model.settings(),
    };
    Ok(ModelHandle { model: Arc::from(model), meta, artifact_path: None })
}

/// Preprocesses one snippet and classifies it.
pub fn predict(model: &ModelHandle, snippet: &Snippet, config: &PreprocessConfig, rename_map: Option<&RenameMap>) -> Result<Prediction, ClassifierError> {
    let prepared = apply_config(snippet, config, rename_map)?;
    Ok(model.predict_prepared(&[&prepared])?.remove(0))
}

/// Batch form of [`predict`]; output order follows input order.
pub fn predict_batch(
    model: &ModelHandle,
    snippets: &[&Snippet],
    config: &PreprocessConfig,
    rename_map: Option<&RenameMap>,
) -> Result<Vec<Prediction>, ClassifierError> {
    let prepared = preprocess_all(snippets, config, rename_map)?;
    let refs: Vec<&Snippet> = prepared.iter().collect();
    model.predict_prepared(&refs)
}

/// Writes weights and `meta.json` into the directory `path`.
pub fn persist(model: &mut ModelHandle, path: &Path) -> Result<(), ClassifierError> {
    std::fs::create_dir_all(path).map_err(|e| ClassifierError::io(path, e))?;
    model.model.save(path)?;
    let meta_path = path.join(META_FILE);
    crate::io::write_json_atomic(&meta_path, &model.meta).map_err(|e| ClassifierError::io(&meta_path, e))?;
    model.artifact_path = Some(path.to_path_buf());
    Ok(())
}

/// Reads and checks the artifact header without loading weights.
pub fn read_meta(path: &Path) -> Result<ModelMeta, ClassifierError> {
    let meta_path = path.join(META_FILE);
    if !meta_path.is_file() {
        return Err(ClassifierError::MissingArtifact(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(&meta_path).map_err(|e| ClassifierError::io(&meta_path, e))?;
    let header: serde_json::Value = serde_json::from_str(&text).map_err(|e| ClassifierError::CorruptArtifact(e.to_string()))?;
    let version = header.get("version").and_then(|v| v.as_str()).unwrap_or("");
    if version != ARTIFACT_VERSION {
        return Err(ClassifierError::VersionMismatch { found: version.to_string(), expected: ARTIFACT_VERSION.to_string() });
    }
    let meta: ModelMeta = serde_json::from_value(header).map_err(|e| ClassifierError::CorruptArtifact(e.to_string()))?;
    if meta.class_order != CLASS_ORDER {
        return Err(ClassifierError::CorruptArtifact(format!("unexpected class order {:?}", meta.class_order)));
    }
    Ok(meta)
}

pub fn restore(path: &Path, backend: &dyn Backend) -> Result<ModelHandle, ClassifierError> {
    let meta = read_meta(path)?;
    if meta.backend != backend.kind() {
        return Err(ClassifierError::BackendMismatch { found: meta.backend, expected: backend.kind() });
    }
    let model = backend.load(path, &meta)?;
    Ok(ModelHandle { model: Arc::from(model), meta, artifact_path: Some(path.to_path_buf()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(epoch: usize, val: Option<f64>) -> EpochRecord {
        EpochRecord { epoch, train_loss: 0.0, train_accuracy: 0.0, validation_accuracy: val }
    }

    #[test]
    fn epoch_selection() {
        assert_eq!(select_epoch(&[rec(1, Some(0.5)), rec(2, Some(0.8)), rec(3, Some(0.8))]), 1);
        assert_eq!(select_epoch(&[rec(1, None), rec(2, None)]), 1);
        assert_eq!(select_epoch(&[rec(1, Some(0.9)), rec(2, Some(0.1))]), 0);
    }

    #[test]
    fn schedule_shape() {
        let hp = Hyperparams { learning_rate: 1.0, warmup_fraction: 0.1, ..Hyperparams::default() };
        assert_eq!(scheduled_rate(0, 100, &hp), 0.1);
        assert_eq!(scheduled_rate(9, 100, &hp), 1.0);
        assert_eq!(scheduled_rate(10, 100, &hp), 1.0);
        assert!((scheduled_rate(55, 100, &hp) - 0.5).abs() < 1e-12);
        assert!(scheduled_rate(99, 100, &hp) > 0.0);
        let flat = Hyperparams { warmup_fraction: 0.0, ..hp };
        assert_eq!(scheduled_rate(0, 10, &flat), 1.0);
    }

    #[test]
    fn hyperparam_ranges() {
        assert!(Hyperparams::default().validate().is_ok());
        assert!(Hyperparams::defaults_for(BackendKind::Linear).validate().is_ok());
        for bad in [
            Hyperparams { epochs: 0, ..Hyperparams::default() },
            Hyperparams { learning_rate: 0.0, ..Hyperparams::default() },
            Hyperparams { warmup_fraction: 1.5, ..Hyperparams::default() },
            Hyperparams { weight_decay: -1.0, ..Hyperparams::default() },
            Hyperparams { max_len: 1, ..Hyperparams::default() },
        ] {
            assert!(matches!(bad.validate(), Err(ClassifierError::InvalidHyperparams(_))));
        }
    }

    #[test]
    fn argmax_contract() {
        let p = Prediction::from_probabilities("a", [0.3, 0.7]);
        assert_eq!((p.label, p.score), (Origin::Chatgpt, 0.7));
        let p = Prediction::from_probabilities("a", [0.5, 0.5]);
        assert_eq!((p.label, p.score), (Origin::Human, 0.5));
    }
}
