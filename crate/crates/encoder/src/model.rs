use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor, D};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use candle_nn::{VarBuilder, VarMap};
use codeprov_core::classifier::{
    scheduled_rate, select_epoch, Backend, BackendKind, Classifier, ClassifierError, EpochRecord, Hyperparams,
    ModelMeta, TrainingLog,
};
use codeprov_core::tokenizer::{SequenceTokenizer, TokenSequence};
use codeprov_core::{Origin, Snippet};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::roberta::{RobertaClassifier, RobertaConfig};
use crate::tokenizer::SubwordTokenizer;
use crate::EncoderError;

pub const CONFIG_FILE: &str = "config.json";
pub const TOKENIZER_FILE: &str = "tokenizer.json";
pub const WEIGHTS_FILE: &str = "model.safetensors";

const ENCODER_PREFIX: &str = "roberta.";
const HEAD_PREFIX: &str = "classifier.";
const HEAD_INIT_STD: f64 = 0.02;
const INFERENCE_BATCH: usize = 8;

fn parse_config(raw: &str) -> Result<RobertaConfig, EncoderError> {
    let config: RobertaConfig = serde_json::from_str(raw).map_err(|e| EncoderError::Config(e.to_string()))?;
    config.check().map_err(EncoderError::Config)?;
    Ok(config)
}

/// The files of a pre-trained checkpoint or of a fine-tuned artifact.
struct Checkpoint {
    config_raw: String,
    config: RobertaConfig,
    tokenizer: SubwordTokenizer,
    weights: HashMap<String, Tensor>,
}

impl Checkpoint {
    fn read(dir: &Path, device: &Device) -> Result<Self, EncoderError> {
        if !dir.is_dir() {
            return Err(EncoderError::MissingCheckpoint(dir.to_path_buf()));
        }
        let config_path = dir.join(CONFIG_FILE);
        let config_raw = std::fs::read_to_string(&config_path).map_err(|e| EncoderError::io(&config_path, e))?;
        let config = parse_config(&config_raw)?;
        let tokenizer = SubwordTokenizer::from_file(&dir.join(TOKENIZER_FILE))?;
        if tokenizer.pad_id() != config.pad_token_id {
            return Err(EncoderError::Config(format!(
                "tokenizer pads with id {} but the model expects {}",
                tokenizer.pad_id(),
                config.pad_token_id
            )));
        }
        let weights_path = dir.join(WEIGHTS_FILE);
        if !weights_path.is_file() {
            return Err(EncoderError::io(&weights_path, std::io::ErrorKind::NotFound.into()));
        }
        let weights = candle_core::safetensors::load(&weights_path, device)?;
        Ok(Checkpoint { config_raw, config, tokenizer, weights })
    }
}

/// Copies the pre-trained encoder weights into `varmap` and draws a fresh
/// classification head from `rng`.
///
/// Checkpoints saved from a bare encoder lack the `roberta.` prefix; both
/// layouts are accepted.
fn initialize(varmap: &VarMap, pretrained: &HashMap<String, Tensor>, rng: &mut ChaCha8Rng) -> Result<(), EncoderError> {
    let vars = varmap.data().lock().expect("var map lock");
    let mut names: Vec<&String> = vars.keys().collect();
    names.sort();
    let normal = Normal::new(0.0, HEAD_INIT_STD).expect("valid std");
    for name in names {
        let var = &vars[name];
        let shape = var.shape().clone();
        let value = if name.starts_with(HEAD_PREFIX) {
            let n = shape.elem_count();
            let values: Vec<f32> = if name.ends_with(".bias") {
                vec![0.0; n]
            } else {
                (0..n).map(|_| normal.sample(rng) as f32).collect()
            };
            Tensor::from_vec(values, &shape, var.device())?
        } else {
            let bare = name.strip_prefix(ENCODER_PREFIX).unwrap_or(name);
            let found = pretrained.get(name.as_str()).or_else(|| pretrained.get(bare));
            let tensor = found.ok_or_else(|| EncoderError::MissingWeight(name.clone()))?;
            if tensor.shape() != &shape {
                return Err(EncoderError::ShapeMismatch {
                    name: name.clone(),
                    expected: shape.dims().to_vec(),
                    found: tensor.dims().to_vec(),
                });
            }
            tensor.to_dtype(DType::F32)?
        };
        var.set(&value)?;
    }
    Ok(())
}

/// A fine-tuned encoder with its classification head.
pub struct EncoderModel {
    model: RobertaClassifier,
    tokenizer: SubwordTokenizer,
    config_raw: String,
    weights: HashMap<String, Tensor>,
    max_len: usize,
    pad_id: u32,
    device: Device,
}

impl EncoderModel {
    fn encode(&self, texts: &[&str]) -> Result<Vec<TokenSequence>, EncoderError> {
        texts.iter().map(|t| self.tokenizer.try_tokenize(t, self.max_len)).collect()
    }

    /// Right-padded ids and attention mask for one batch.
    fn batch(&self, seqs: &[&TokenSequence]) -> Result<(Tensor, Tensor), EncoderError> {
        let width = seqs.iter().map(|s| s.len()).max().unwrap_or(2);
        let mut ids = Vec::with_capacity(seqs.len() * width);
        let mut mask = Vec::with_capacity(seqs.len() * width);
        for s in seqs {
            ids.extend_from_slice(&s.ids);
            ids.extend(std::iter::repeat_n(self.pad_id, width - s.len()));
            mask.extend(std::iter::repeat_n(1u32, s.len()));
            mask.extend(std::iter::repeat_n(0u32, width - s.len()));
        }
        let shape = (seqs.len(), width);
        let ids = Tensor::from_vec(ids, shape, &self.device)?;
        let mask = Tensor::from_vec(mask, shape, &self.device)?;
        Ok((ids, mask))
    }

    fn logits(&self, seqs: &[&TokenSequence]) -> Result<Tensor, EncoderError> {
        let (ids, mask) = self.batch(seqs)?;
        Ok(self.model.forward(&ids, &mask)?)
    }

    fn chatgpt_probability(&self, seqs: &[TokenSequence]) -> Result<Vec<f64>, EncoderError> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(INFERENCE_BATCH) {
            let refs: Vec<&TokenSequence> = chunk.iter().collect();
            let probs = candle_nn::ops::softmax(&self.logits(&refs)?.detach(), D::Minus1)?.to_vec2::<f32>()?;
            out.extend(probs.iter().map(|p| p[Origin::Chatgpt.index()] as f64));
        }
        Ok(out)
    }

    fn accuracy(&self, seqs: &[TokenSequence], labels: &[u32]) -> Result<f64, EncoderError> {
        let p = self.chatgpt_probability(seqs)?;
        let correct = p.iter().zip(labels).filter(|(p, &y)| u32::from(**p > 0.5) == y).count();
        Ok(correct as f64 / labels.len().max(1) as f64)
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

impl Classifier for EncoderModel {
    fn tokenizer_identity(&self) -> String {
        self.tokenizer.identity()
    }

    fn probabilities(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>, ClassifierError> {
        let seqs = self.encode(texts)?;
        Ok(self.chatgpt_probability(&seqs)?.into_iter().map(|p| [1.0 - p, p]).collect())
    }

    fn save(&self, dir: &Path) -> Result<(), ClassifierError> {
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            codeprov_core::io::write_atomic(&path, bytes).map_err(|e| ClassifierError::io(&path, e))
        };
        write(CONFIG_FILE, self.config_raw.as_bytes())?;
        write(TOKENIZER_FILE, self.tokenizer.raw())?;
        let partial = dir.join(format!(".{WEIGHTS_FILE}.partial"));
        candle_core::safetensors::save(&self.weights, &partial).map_err(EncoderError::from)?;
        let target = dir.join(WEIGHTS_FILE);
        std::fs::rename(&partial, &target).map_err(|e| ClassifierError::io(&target, e))
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({ "architecture": "roberta-sequence-classification", "max_len": self.max_len })
    }
}

/// Fine-tunes a RoBERTa-family checkpoint directory holding
/// `config.json`, `tokenizer.json` and `model.safetensors`.
#[derive(Debug, Clone)]
pub struct EncoderBackend {
    checkpoint: PathBuf,
}

impl EncoderBackend {
    pub fn new(checkpoint: impl Into<PathBuf>) -> Self {
        EncoderBackend { checkpoint: checkpoint.into() }
    }

    /// Backend used only to restore artifacts, which carry their own weights.
    pub fn for_restore() -> Self {
        EncoderBackend { checkpoint: PathBuf::new() }
    }

    pub fn checkpoint(&self) -> &Path {
        &self.checkpoint
    }

    fn fit_inner(&self, train: &[&Snippet], validation: &[&Snippet], hp: &Hyperparams) -> Result<(EncoderModel, TrainingLog), EncoderError> {
        let device = Device::Cpu;
        let ckpt = Checkpoint::read(&self.checkpoint, &device)?;
        let varmap = VarMap::new();
        let model = RobertaClassifier::new(&ckpt.config, 2, VarBuilder::from_varmap(&varmap, DType::F32, &device))?;
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        initialize(&varmap, &ckpt.weights, &mut rng)?;

        let mut model = EncoderModel {
            model,
            max_len: hp.max_len.min(ckpt.config.position_limit()),
            pad_id: ckpt.tokenizer.pad_id(),
            tokenizer: ckpt.tokenizer,
            config_raw: ckpt.config_raw,
            weights: HashMap::new(),
            device,
        };
        let mut train: Vec<&Snippet> = train.to_vec();
        train.sort_by(|a, b| a.id().cmp(b.id()));
        let prepare = |set: &[&Snippet]| -> Result<(Vec<TokenSequence>, Vec<u32>), EncoderError> {
            let texts: Vec<&str> = set.iter().map(|s| s.text()).collect();
            Ok((model.encode(&texts)?, set.iter().map(|s| s.origin().index() as u32).collect()))
        };
        let (train_seqs, train_labels) = prepare(&train)?;
        let (val_seqs, val_labels) = prepare(validation)?;

        let params = ParamsAdamW { lr: hp.learning_rate, weight_decay: hp.weight_decay, ..ParamsAdamW::default() };
        let mut opt = AdamW::new(varmap.all_vars(), params)?;
        let mut order: Vec<usize> = (0..train_seqs.len()).collect();
        let total_steps = hp.epochs * train_seqs.len().div_ceil(hp.batch_size);
        let mut step = 0;
        let mut history: Vec<EpochRecord> = Vec::with_capacity(hp.epochs);
        let mut best: Option<HashMap<String, Tensor>> = None;

        for epoch in 1..=hp.epochs {
            order.shuffle(&mut rng);
            let (mut loss_sum, mut correct) = (0.0, 0usize);
            for batch in order.chunks(hp.batch_size) {
                opt.set_learning_rate(scheduled_rate(step, total_steps, hp));
                let seqs: Vec<&TokenSequence> = batch.iter().map(|&i| &train_seqs[i]).collect();
                let labels: Vec<u32> = batch.iter().map(|&i| train_labels[i]).collect();
                let logits = model.logits(&seqs)?;
                let target = Tensor::new(labels.as_slice(), &model.device)?;
                let loss = candle_nn::loss::cross_entropy(&logits, &target)?;
                opt.backward_step(&loss)?;
                loss_sum += loss.to_scalar::<f32>()? as f64 * batch.len() as f64;
                let predicted = logits.argmax(D::Minus1)?.to_vec1::<u32>()?;
                correct += predicted.iter().zip(&labels).filter(|(p, y)| p == y).count();
                step += 1;
            }
            let n = train_seqs.len() as f64;
            let validation_accuracy = if val_seqs.is_empty() { None } else { Some(model.accuracy(&val_seqs, &val_labels)?) };
            history.push(EpochRecord { epoch, train_loss: loss_sum / n, train_accuracy: correct as f64 / n, validation_accuracy });
            if validation_accuracy.is_some() && select_epoch(&history) == epoch - 1 {
                best = Some(snapshot(&varmap)?);
            }
        }

        if let Some(weights) = best {
            let vars = varmap.data().lock().expect("var map lock");
            for (name, value) in &weights {
                vars[name].set(value)?;
            }
        }
        model.weights = snapshot(&varmap)?;
        let chosen = select_epoch(&history);
        let log = TrainingLog { history, selected_epoch: chosen + 1, train_size: train_seqs.len(), validation_size: val_seqs.len() };
        Ok((model, log))
    }

    fn load_inner(dir: &Path, meta: &ModelMeta) -> Result<EncoderModel, EncoderError> {
        let device = Device::Cpu;
        let ckpt = Checkpoint::read(dir, &device)?;
        let vb = VarBuilder::from_tensors(ckpt.weights.clone(), DType::F32, &device);
        let model = RobertaClassifier::new(&ckpt.config, 2, vb)?;
        let max_len = meta.backend_settings.get("max_len").and_then(|v| v.as_u64()).map_or(meta.hyperparams.max_len, |v| v as usize);
        let model = EncoderModel {
            model,
            max_len: max_len.min(ckpt.config.position_limit()),
            pad_id: ckpt.tokenizer.pad_id(),
            tokenizer: ckpt.tokenizer,
            config_raw: ckpt.config_raw,
            weights: ckpt.weights,
            device,
        };
        if model.tokenizer_identity() != meta.tokenizer {
            return Err(EncoderError::Config(format!(
                "tokenizer {:?} does not match header {:?}",
                model.tokenizer_identity(),
                meta.tokenizer
            )));
        }
        Ok(model)
    }
}

fn snapshot(varmap: &VarMap) -> Result<HashMap<String, Tensor>, EncoderError> {
    let vars = varmap.data().lock().expect("var map lock");
    vars.iter().map(|(name, var)| Ok((name.clone(), var.as_tensor().detach().copy()?))).collect()
}

impl Backend for EncoderBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Encoder
    }

    fn fit(&self, train: &[&Snippet], validation: &[&Snippet], hp: &Hyperparams) -> Result<(Box<dyn Classifier>, TrainingLog), ClassifierError> {
        hp.validate()?;
        if train.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if let Some(only) = Origin::ALL.into_iter().find(|o| train.iter().all(|s| s.origin() == *o)) {
            return Err(ClassifierError::SingleClass(only));
        }
        let (model, log) = self.fit_inner(train, validation, hp)?;
        Ok((Box::new(model), log))
    }

    fn load(&self, dir: &Path, meta: &ModelMeta) -> Result<Box<dyn Classifier>, ClassifierError> {
        Ok(Box::new(Self::load_inner(dir, meta)?))
    }
}
