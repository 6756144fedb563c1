//! Logistic regression over token counts of the reference tokenizer.
//!
//! Features are `ln(1 + count)` per token times a smoothed inverse document
//! frequency from the training part, scaled to unit length. Tokens found in
//! a single training snippet and the reserved ids carry no feature. Weights
//! start at zero, the loss gradient is written in a sign-symmetric form and
//! AdamW preserves that symmetry, so swapping every training label yields
//! exactly the negated model.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    scheduled_rate, select_epoch, Backend, BackendKind, Classifier, ClassifierError, EpochRecord, Hyperparams, ModelMeta,
    TrainingLog,
};
use crate::snippet::{Origin, Snippet};
use crate::tokenizer::{surface_tokens, ReferenceTokenizer, SequenceTokenizer, Vocabulary, RESERVED};

const WEIGHTS_FILE: &str = "weights.bin";
const VOCAB_FILE: &str = "vocab.txt";
/// Tokens seen in fewer training snippets are left out of the vocabulary.
const MIN_DOCUMENT_FREQUENCY: usize = 2;

type Features = Vec<(u32, f64)>;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sign(origin: Origin) -> f64 {
    match origin {
        Origin::Chatgpt => 1.0,
        Origin::Human => -1.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    tokenizer: ReferenceTokenizer,
    weights: Vec<f64>,
    idf: Vec<f64>,
    bias: f64,
    max_len: usize,
}

impl LinearModel {
    fn features(&self, text: &str) -> Features {
        let seq = self.tokenizer.tokenize(text, self.max_len);
        let mut ids: Vec<u32> = seq.ids.into_iter().filter(|&id| id as usize >= RESERVED).collect();
        ids.sort_unstable();
        let mut out: Features = Vec::new();
        for id in ids {
            match out.last_mut() {
                Some((last, count)) if *last == id => *count += 1.0,
                _ => out.push((id, 1.0)),
            }
        }
        let mut norm = 0.0;
        for (id, v) in out.iter_mut() {
            *v = v.ln_1p() * self.idf[*id as usize];
            norm += *v * *v;
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Vec::new();
        }
        for (_, v) in out.iter_mut() {
            *v /= norm;
        }
        out
    }

    /// Log-odds of the generated class.
    fn logit(&self, x: &Features) -> f64 {
        x.iter().fold(self.bias, |acc, &(id, v)| acc + self.weights[id as usize] * v)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.tokenizer.vocab()
    }
}

impl Classifier for LinearModel {
    fn tokenizer_identity(&self) -> String {
        self.tokenizer.identity()
    }

    fn probabilities(&self, texts: &[&str]) -> Result<Vec<[f64; 2]>, ClassifierError> {
        Ok(texts
            .par_iter()
            .map(|t| {
                let z = self.logit(&self.features(t));
                [sigmoid(-z), sigmoid(z)]
            })
            .collect())
    }

    fn save(&self, dir: &Path) -> Result<(), ClassifierError> {
        let mut bytes = Vec::with_capacity(8 * (2 * self.weights.len() + 1));
        for w in std::iter::once(&self.bias).chain(&self.weights).chain(&self.idf) {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        let weights = dir.join(WEIGHTS_FILE);
        crate::io::write_atomic(&weights, &bytes).map_err(|e| ClassifierError::io(&weights, e))?;
        let vocab = dir.join(VOCAB_FILE);
        self.vocab().save(&vocab).map_err(|e| ClassifierError::io(&vocab, e))
    }

    fn settings(&self) -> serde_json::Value {
        serde_json::json!({ "features": "log1p-count-idf-l2", "vocab_size": self.tokenizer.vocab_size() })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearBackend;

/// Adam with decoupled weight decay; the bias is not decayed.
struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    m_bias: f64,
    v_bias: f64,
    t: i32,
}

impl AdamW {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        AdamW { m: vec![0.0; n], v: vec![0.0; n], m_bias: 0.0, v_bias: 0.0, t: 0 }
    }

    fn moment(m: &mut f64, v: &mut f64, g: f64, c1: f64, c2: f64) -> f64 {
        *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
        *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
        (*m / c1) / ((*v / c2).sqrt() + Self::EPS)
    }

    fn step(&mut self, weights: &mut [f64], bias: &mut f64, grad: &[f64], grad_bias: f64, rate: f64, decay: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (j, w) in weights.iter_mut().enumerate() {
            let u = Self::moment(&mut self.m[j], &mut self.v[j], grad[j], c1, c2);
            *w -= rate * (u + decay * *w);
        }
        *bias -= rate * Self::moment(&mut self.m_bias, &mut self.v_bias, grad_bias, c1, c2);
    }
}

struct Example {
    x: Features,
    y: f64,
}

fn evaluate(model: &LinearModel, data: &[Example]) -> (f64, f64) {
    if data.is_empty() {
        return (0.0, 0.0);
    }
    let (loss, correct) = data.iter().fold((0.0, 0usize), |(loss, correct), ex| {
        let z = model.logit(&ex.x);
        let predicted = if z > 0.0 { 1.0 } else { -1.0 };
        (loss + softplus(-ex.y * z), correct + usize::from(predicted == ex.y))
    });
    (loss / data.len() as f64, correct as f64 / data.len() as f64)
}

impl Backend for LinearBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Linear
    }

    fn fit(&self, train: &[&Snippet], validation: &[&Snippet], hp: &Hyperparams) -> Result<(Box<dyn Classifier>, TrainingLog), ClassifierError> {
        hp.validate()?;
        if train.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if let Some(only) = Origin::ALL.into_iter().find(|o| train.iter().all(|s| s.origin() == *o)) {
            return Err(ClassifierError::SingleClass(only));
        }
        let mut train: Vec<&Snippet> = train.to_vec();
        train.sort_by(|a, b| a.id().cmp(b.id()));

        let body_len = hp.max_len - 2;
        let documents: Vec<BTreeSet<&str>> = train.par_iter().map(|s| surface_tokens(s.text()).into_iter().take(body_len).collect()).collect();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in &documents {
            for token in doc {
                *df.entry(token).or_default() += 1;
            }
        }
        df.retain(|_, d| *d >= MIN_DOCUMENT_FREQUENCY);
        let tokenizer = ReferenceTokenizer::new(Vocabulary::from_tokens(df.keys().copied()));
        let n = train.len() as f64;
        let mut idf = vec![0.0; tokenizer.vocab_size()];
        for (token, d) in &df {
            idf[tokenizer.vocab().id(token) as usize] = ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0;
        }
        let mut model = LinearModel { weights: vec![0.0; idf.len()], idf, tokenizer, bias: 0.0, max_len: hp.max_len };
        let examples = |set: &[&Snippet]| -> Vec<Example> {
            set.par_iter().map(|s| Example { x: model.features(s.text()), y: sign(s.origin()) }).collect()
        };
        let train_data = examples(&train);
        let validation_data = examples(validation);

        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut order: Vec<usize> = (0..train_data.len()).collect();
        let total_steps = hp.epochs * train_data.len().div_ceil(hp.batch_size);
        let mut step = 0;
        let mut opt = AdamW::new(model.weights.len());
        let mut grad = vec![0.0; model.weights.len()];
        let mut snapshots = Vec::with_capacity(hp.epochs);
        let mut history = Vec::with_capacity(hp.epochs);

        for epoch in 1..=hp.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(hp.batch_size) {
                let rate = scheduled_rate(step, total_steps, hp);
                let mut grad_bias = 0.0;
                for &i in batch {
                    let ex = &train_data[i];
                    let dz = -ex.y * sigmoid(-ex.y * model.logit(&ex.x));
                    grad_bias += dz;
                    for &(id, v) in &ex.x {
                        grad[id as usize] += dz * v;
                    }
                }
                let inv = 1.0 / batch.len() as f64;
                grad.iter_mut().for_each(|g| *g *= inv);
                opt.step(&mut model.weights, &mut model.bias, &grad, grad_bias * inv, rate, hp.weight_decay);
                grad.iter_mut().for_each(|g| *g = 0.0);
                step += 1;
            }
            let (train_loss, train_accuracy) = evaluate(&model, &train_data);
            let validation_accuracy = (!validation_data.is_empty()).then(|| evaluate(&model, &validation_data).1);
            history.push(EpochRecord { epoch, train_loss, train_accuracy, validation_accuracy });
            snapshots.push((model.weights.clone(), model.bias));
        }

        let chosen = select_epoch(&history);
        let (weights, bias) = snapshots.swap_remove(chosen);
        model.weights = weights;
        model.bias = bias;
        let log = TrainingLog { history, selected_epoch: chosen + 1, train_size: train_data.len(), validation_size: validation_data.len() };
        Ok((Box::new(model), log))
    }

    fn load(&self, dir: &Path, meta: &ModelMeta) -> Result<Box<dyn Classifier>, ClassifierError> {
        let vocab_path = dir.join(VOCAB_FILE);
        let vocab = Vocabulary::load(&vocab_path).map_err(|e| ClassifierError::io(&vocab_path, e))?;
        let weights_path = dir.join(WEIGHTS_FILE);
        let bytes = std::fs::read(&weights_path).map_err(|e| ClassifierError::io(&weights_path, e))?;
        let expected = 8 * (2 * vocab.len() + 1);
        if bytes.len() != expected {
            return Err(ClassifierError::CorruptArtifact(format!(
                "{} holds {} bytes but the vocabulary needs {expected}",
                weights_path.display(),
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        let v = vocab.len();
        let model = LinearModel {
            bias: values[0],
            weights: values[1..=v].to_vec(),
            idf: values[v + 1..].to_vec(),
            tokenizer: ReferenceTokenizer::new(vocab),
            max_len: meta.hyperparams.max_len,
        };
        if model.tokenizer_identity() != meta.tokenizer {
            return Err(ClassifierError::CorruptArtifact(format!(
                "tokenizer {:?} does not match header {:?}",
                model.tokenizer_identity(),
                meta.tokenizer
            )));
        }
        Ok(Box::new(model))
    }
}
