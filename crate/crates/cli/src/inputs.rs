use std::path::{Path, PathBuf};

use codeprov_core::classifier::{self, Backend, BackendKind, LinearBackend, ModelHandle};
use codeprov_core::corpus::{ingest_manifest_file, parse_manifest};
use codeprov_core::extractor::{PreprocessConfig, RenameMap, RenameProvenance};
use codeprov_core::split::DatasetSplit;
use codeprov_core::{Corpus, Provenance};
use codeprov_encoder::EncoderBackend;
use serde::de::DeserializeOwned;

/// How a subcommand failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs, detected before any work was done.
    Invalid(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub fn invalid(message: impl std::fmt::Display) -> Failure {
    Failure::Invalid(message.to_string())
}

pub type Outcome = Result<(), Failure>;

pub fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{}: no such file", path.display())))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: not a {what}: {e}", path.display())))
}

/// Refuses an output path that names one of the inputs.
pub fn check_output(out: &Path, inputs: &[&Path]) -> Result<(), Failure> {
    let Ok(out) = out.canonicalize() else { return Ok(()) };
    for input in inputs {
        if input.canonicalize().is_ok_and(|p| p == out) {
            return Err(invalid(format!("output {} would overwrite an input", out.display())));
        }
    }
    Ok(())
}

/// A manifest is paired when every record carries a pairing key.
fn manifest_provenance(path: &Path) -> Result<Provenance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let records = parse_manifest(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let paired = !records.is_empty() && records.iter().all(|r| r.pairing_key.is_some());
    Ok(if paired { Provenance::PairedP } else { Provenance::UnpairedU })
}

/// Loads a corpus from a JSON snapshot written by `ingest` (`.json`) or
/// from a JSON-lines manifest (anything else).
pub fn load_corpus(path: &Path, provenance: Option<Provenance>, root: Option<&Path>) -> Result<Corpus, Failure> {
    require_file(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let snapshot: Corpus = read_json(path, "corpus snapshot")?;
        let provenance = provenance.unwrap_or(snapshot.provenance());
        return Corpus::new(snapshot.into_snippets(), provenance).map_err(|e| invalid(format!("{}: {e}", path.display())));
    }
    let provenance = match provenance {
        Some(p) => p,
        None => manifest_provenance(path)?,
    };
    ingest_manifest_file(path, root, provenance).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn load_split(path: &Path, corpus: &Corpus) -> Result<DatasetSplit, Failure> {
    let split: DatasetSplit = read_json(path, "split")?;
    for part in [&split.train, &split.validation, &split.test] {
        if let Some(id) = part.iter().find(|id| corpus.get(id).is_none()) {
            return Err(invalid(format!("{}: snippet {id} is not in the corpus", path.display())));
        }
    }
    Ok(split)
}

pub fn parse_configs(names: &[String], prefixes: &[String]) -> Result<Vec<PreprocessConfig>, Failure> {
    if names.is_empty() {
        return Err(invalid("no configuration given"));
    }
    names
        .iter()
        .map(|n| {
            PreprocessConfig::preset(n.trim())
                .map(|c| c.with_project_prefixes(prefixes.to_vec()))
                .ok_or_else(|| invalid(format!("unknown configuration {n:?} (expected C1..C8)")))
        })
        .collect()
}

pub fn load_human_names(path: Option<&Path>) -> Result<Option<RenameMap>, Failure> {
    let Some(path) = path else { return Ok(None) };
    require_file(path)?;
    RenameMap::from_file(path, RenameProvenance::Human).map(Some).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn training_backend(kind: BackendKind, checkpoint: Option<&PathBuf>) -> Result<Box<dyn Backend>, Failure> {
    match (kind, checkpoint) {
        (BackendKind::Linear, _) => Ok(Box::new(LinearBackend)),
        (BackendKind::Encoder, Some(dir)) if dir.is_dir() => Ok(Box::new(EncoderBackend::new(dir))),
        (BackendKind::Encoder, Some(dir)) => Err(invalid(format!("{}: checkpoint directory not found", dir.display()))),
        (BackendKind::Encoder, None) => Err(invalid("the encoder backend needs --checkpoint")),
    }
}

/// Restores a persisted model with the backend recorded in its metadata.
pub fn restore_model(dir: &Path) -> Result<ModelHandle, Failure> {
    let meta = classifier::read_meta(dir).map_err(|e| invalid(format!("{}: {e}", dir.display())))?;
    let backend: Box<dyn Backend> = match meta.backend {
        BackendKind::Linear => Box::new(LinearBackend),
        BackendKind::Encoder => Box::new(EncoderBackend::for_restore()),
    };
    Ok(classifier::restore(dir, backend.as_ref())?)
}

/// `label=path` or a bare path labelled by its file stem.
pub fn labelled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            (stem(&path), path)
        }
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}
