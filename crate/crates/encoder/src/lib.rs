//! Encoder backend: fine-tunes a pre-trained RoBERTa-family code encoder
//! with a two-way classification head, on the CPU.
//!
//! A checkpoint is a directory with `config.json`, `tokenizer.json` and
//! `model.safetensors`. Trained artifacts use the same layout next to the
//! `meta.json` header written by `codeprov-core`.

mod model;
mod roberta;
mod tokenizer;

use std::path::{Path, PathBuf};

use codeprov_core::classifier::ClassifierError;
use thiserror::Error;

pub use model::{EncoderBackend, EncoderModel, CONFIG_FILE, TOKENIZER_FILE, WEIGHTS_FILE};
pub use roberta::{RobertaClassifier, RobertaConfig};
pub use tokenizer::SubwordTokenizer;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("no checkpoint directory at {0}")]
    MissingCheckpoint(PathBuf),
    #[error("bad model config: {0}")]
    Config(String),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("checkpoint has no weight named {0}")]
    MissingWeight(String),
    #[error("weight {name} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl EncoderError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        EncoderError::Io { path: path.to_path_buf(), source }
    }
}

impl From<EncoderError> for ClassifierError {
    fn from(e: EncoderError) -> Self {
        match e {
            EncoderError::MissingCheckpoint(path) => ClassifierError::MissingArtifact(path),
            EncoderError::Io { path, source } => ClassifierError::Io { path, source },
            other => ClassifierError::Backend(other.to_string()),
        }
    }
}
