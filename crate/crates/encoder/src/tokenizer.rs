//! Adapter from a checkpoint's `tokenizer.json` to [`SequenceTokenizer`].

use std::path::Path;

use codeprov_core::tokenizer::{SequenceTokenizer, TokenSequence};
use sha2::{Digest, Sha256};
use tokenizers::Tokenizer;

use crate::EncoderError;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const PAD: &str = "<pad>";

/// The encoder's native subword tokenizer.
///
/// Special tokens are added here rather than by the tokenizer's own post
/// processor, so truncation always keeps the head of the text between `<s>`
/// and `</s>`.
pub struct SubwordTokenizer {
    inner: Tokenizer,
    raw: Vec<u8>,
    digest: String,
    bos_id: u32,
    eos_id: u32,
    pad_id: u32,
}

impl std::fmt::Debug for SubwordTokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubwordTokenizer").field("identity", &self.identity()).finish()
    }
}

impl SubwordTokenizer {
    pub fn from_bytes(raw: Vec<u8>) -> Result<Self, EncoderError> {
        let mut inner = Tokenizer::from_bytes(&raw).map_err(|e| EncoderError::Tokenizer(e.to_string()))?;
        inner.with_truncation(None).map_err(|e| EncoderError::Tokenizer(e.to_string()))?;
        inner.with_padding(None);
        let special = |token: &str| {
            inner.token_to_id(token).ok_or_else(|| EncoderError::Tokenizer(format!("vocabulary has no {token} token")))
        };
        let (bos_id, eos_id, pad_id) = (special(BOS)?, special(EOS)?, special(PAD)?);
        let digest = format!("{:x}", Sha256::digest(&raw));
        Ok(SubwordTokenizer { inner, raw, digest, bos_id, eos_id, pad_id })
    }

    pub fn from_file(path: &Path) -> Result<Self, EncoderError> {
        let raw = std::fs::read(path).map_err(|e| EncoderError::io(path, e))?;
        Self::from_bytes(raw)
    }

    /// The exact bytes the tokenizer was read from.
    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    pub fn pad_id(&self) -> u32 {
        self.pad_id
    }

    pub fn try_tokenize(&self, text: &str, max_len: usize) -> Result<TokenSequence, EncoderError> {
        let encoding = self.inner.encode(text, false).map_err(|e| EncoderError::Tokenizer(e.to_string()))?;
        let mut seq = TokenSequence::wrap(encoding.get_ids().to_vec(), max_len, self.bos_id, self.eos_id);
        let mut surface = Vec::with_capacity(seq.len());
        surface.push(BOS.to_string());
        surface.extend(encoding.get_tokens().iter().take(seq.len() - 2).cloned());
        surface.push(EOS.to_string());
        seq.surface = Some(surface);
        Ok(seq)
    }
}

impl SequenceTokenizer for SubwordTokenizer {
    fn identity(&self) -> String {
        format!("subword/{}/sha256:{}", self.vocab_size(), self.digest)
    }

    fn vocab_size(&self) -> usize {
        self.inner.get_vocab_size(true)
    }

    /// Text the tokenizer cannot encode becomes an empty body.
    fn tokenize(&self, text: &str, max_len: usize) -> TokenSequence {
        self.try_tokenize(text, max_len).unwrap_or_else(|_| TokenSequence::wrap(Vec::new(), max_len, self.bos_id, self.eos_id))
    }
}
