//! RoBERTa encoder with a sequence-classification head, written with
//! differentiable tensor operations only so that every weight receives a
//! gradient during fine-tuning. Parameter names follow published checkpoints.
//!
//! Dropout is not applied; fine-tuning stays a deterministic function of the
//! seed.

use candle_core::{DType, IndexOp, Module, Result, Tensor, D};
use candle_nn::{embedding, linear, Embedding, Init, Linear, VarBuilder};
use serde::Deserialize;

fn default_one() -> usize {
    1
}

fn default_pad() -> u32 {
    1
}

fn default_eps() -> f64 {
    1e-5
}

fn default_act() -> String {
    "gelu".into()
}

/// The fields of a `config.json` the model needs; everything else is ignored.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RobertaConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_one")]
    pub type_vocab_size: usize,
    #[serde(default = "default_pad")]
    pub pad_token_id: u32,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_act")]
    pub hidden_act: String,
}

impl RobertaConfig {
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.num_attention_heads == 0 || !self.hidden_size.is_multiple_of(self.num_attention_heads) {
            return Err(format!("hidden_size {} is not divisible into {} heads", self.hidden_size, self.num_attention_heads));
        }
        Activation::parse(&self.hidden_act).map(|_| ())
    }

    /// Longest sequence the position table admits; positions start after the
    /// padding id.
    pub fn position_limit(&self) -> usize {
        self.max_position_embeddings.saturating_sub(self.pad_token_id as usize + 1)
    }
}

#[derive(Debug, Clone, Copy)]
enum Activation {
    GeluErf,
    GeluTanh,
    Relu,
}

impl Activation {
    fn parse(name: &str) -> std::result::Result<Self, String> {
        match name {
            "gelu" => Ok(Activation::GeluErf),
            "gelu_new" | "gelu_pytorch_tanh" => Ok(Activation::GeluTanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unsupported hidden_act {other:?}")),
        }
    }

    fn apply(self, x: &Tensor) -> Result<Tensor> {
        match self {
            Activation::GeluErf => x.gelu_erf(),
            Activation::GeluTanh => x.gelu(),
            Activation::Relu => x.relu(),
        }
    }
}

struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    fn new(size: usize, eps: f64, vb: VarBuilder) -> Result<Self> {
        let weight = vb.get_with_hints(size, "weight", Init::Const(1.0))?;
        let bias = vb.get_with_hints(size, "bias", Init::Const(0.0))?;
        Ok(LayerNorm { weight, bias, eps })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let centered = x.broadcast_sub(&x.mean_keepdim(D::Minus1)?)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        normed.broadcast_mul(&self.weight)?.broadcast_add(&self.bias)
    }
}

struct Embeddings {
    words: Embedding,
    positions: Embedding,
    token_types: Embedding,
    norm: LayerNorm,
    pad_id: u32,
}

impl Embeddings {
    fn new(cfg: &RobertaConfig, vb: VarBuilder) -> Result<Self> {
        Ok(Embeddings {
            words: embedding(cfg.vocab_size, cfg.hidden_size, vb.pp("word_embeddings"))?,
            positions: embedding(cfg.max_position_embeddings, cfg.hidden_size, vb.pp("position_embeddings"))?,
            token_types: embedding(cfg.type_vocab_size, cfg.hidden_size, vb.pp("token_type_embeddings"))?,
            norm: LayerNorm::new(cfg.hidden_size, cfg.layer_norm_eps, vb.pp("LayerNorm"))?,
            pad_id: cfg.pad_token_id,
        })
    }

    /// Real tokens are numbered from `pad_id + 1`; padding sits at `pad_id`.
    fn forward(&self, ids: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let keep = mask.to_dtype(DType::F32)?;
        let positions = ((keep.cumsum(1)? * &keep)? + self.pad_id as f64)?.to_dtype(DType::U32)?;
        let x = self.words.forward(ids)?;
        let x = (x + self.positions.forward(&positions)?)?;
        let x = x.broadcast_add(&self.token_types.forward(&ids.zeros_like()?)?)?;
        self.norm.forward(&x)
    }
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attention_out: Linear,
    attention_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    output_norm: LayerNorm,
    heads: usize,
    activation: Activation,
}

impl Layer {
    fn new(cfg: &RobertaConfig, activation: Activation, vb: VarBuilder) -> Result<Self> {
        let h = cfg.hidden_size;
        let attention = vb.pp("attention");
        Ok(Layer {
            query: linear(h, h, attention.pp("self").pp("query"))?,
            key: linear(h, h, attention.pp("self").pp("key"))?,
            value: linear(h, h, attention.pp("self").pp("value"))?,
            attention_out: linear(h, h, attention.pp("output").pp("dense"))?,
            attention_norm: LayerNorm::new(h, cfg.layer_norm_eps, attention.pp("output").pp("LayerNorm"))?,
            intermediate: linear(h, cfg.intermediate_size, vb.pp("intermediate").pp("dense"))?,
            output: linear(cfg.intermediate_size, h, vb.pp("output").pp("dense"))?,
            output_norm: LayerNorm::new(h, cfg.layer_norm_eps, vb.pp("output").pp("LayerNorm"))?,
            heads: cfg.num_attention_heads,
            activation,
        })
    }

    /// `mask_bias` is 0 for visible keys and a large negative number for padding,
    /// shaped `(batch, 1, 1, keys)`.
    fn forward(&self, x: &Tensor, mask_bias: &Tensor) -> Result<Tensor> {
        let (b, t, hidden) = x.dims3()?;
        let head_dim = hidden / self.heads;
        let split = |y: Tensor| y.reshape((b, t, self.heads, head_dim))?.transpose(1, 2)?.contiguous();
        let q = split(self.query.forward(x)?)?;
        let k = split(self.key.forward(x)?)?;
        let v = split(self.value.forward(x)?)?;
        let scores = (q.matmul(&k.t()?.contiguous()?)? / (head_dim as f64).sqrt())?.broadcast_add(mask_bias)?;
        let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let context = probs.matmul(&v)?.transpose(1, 2)?.reshape((b, t, hidden))?;
        let attended = self.attention_norm.forward(&(self.attention_out.forward(&context)? + x)?)?;
        let inner = self.activation.apply(&self.intermediate.forward(&attended)?)?;
        self.output_norm.forward(&(self.output.forward(&inner)? + attended)?)
    }
}

/// Encoder plus head: the first position's final state goes through a dense
/// layer with `tanh` and a projection onto the two classes.
pub struct RobertaClassifier {
    embeddings: Embeddings,
    layers: Vec<Layer>,
    dense: Linear,
    out_proj: Linear,
}

const MASKED: f64 = -1e9;

impl RobertaClassifier {
    pub fn new(cfg: &RobertaConfig, num_labels: usize, vb: VarBuilder) -> Result<Self> {
        let activation = Activation::parse(&cfg.hidden_act).map_err(candle_core::Error::Msg)?;
        let encoder = vb.pp("roberta");
        let layers = (0..cfg.num_hidden_layers)
            .map(|i| Layer::new(cfg, activation, encoder.pp("encoder").pp(format!("layer.{i}"))))
            .collect::<Result<Vec<_>>>()?;
        let head = vb.pp("classifier");
        Ok(RobertaClassifier {
            embeddings: Embeddings::new(cfg, encoder.pp("embeddings"))?,
            layers,
            dense: linear(cfg.hidden_size, cfg.hidden_size, head.pp("dense"))?,
            out_proj: linear(cfg.hidden_size, num_labels, head.pp("out_proj"))?,
        })
    }

    /// Logits of shape `(batch, num_labels)` for right-padded `ids` with a
    /// 0/1 `mask`, both `(batch, seq)` of `u32`.
    pub fn forward(&self, ids: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let (b, t) = ids.dims2()?;
        let mask_bias = ((1.0 - mask.to_dtype(DType::F32)?)? * MASKED)?.reshape((b, 1, 1, t))?;
        let mut x = self.embeddings.forward(ids, mask)?;
        for layer in &self.layers {
            x = layer.forward(&x, &mask_bias)?;
        }
        let first = x.i((.., 0))?.contiguous()?;
        self.out_proj.forward(&self.dense.forward(&first)?.tanh()?)
    }
}
