//! Bounded, sentinel-delimited token sequences.
//!
//! [`ReferenceTokenizer`] is a deterministic whitespace/punctuation splitter
//! with a corpus-built vocabulary. Encoder backends bring their own subword
//! tokenizer behind the same [`SequenceTokenizer`] trait.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::extractor::lexer::is_ident_continue;

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const RESERVED: usize = 3;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub surface: Option<Vec<String>>,
    pub max_len: usize,
    pub bos_id: u32,
    pub eos_id: u32,
}

impl TokenSequence {
    /// Wraps an encoded body in BOS/EOS, keeping only the head of the body
    /// when it does not fit in `max_len`.
    pub fn wrap(mut body: Vec<u32>, max_len: usize, bos_id: u32, eos_id: u32) -> Self {
        assert!(max_len >= 2, "max_len must leave room for BOS and EOS (got {max_len})");
        body.truncate(max_len - 2);
        let mut ids = Vec::with_capacity(body.len() + 2);
        ids.push(bos_id);
        ids.extend(body);
        ids.push(eos_id);
        TokenSequence { ids, surface: None, max_len, bos_id, eos_id }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ids between the sentinels.
    pub fn body(&self) -> &[u32] {
        &self.ids[1..self.ids.len() - 1]
    }
}

pub trait SequenceTokenizer: Send + Sync {
    /// Stable description stored with trained models.
    fn identity(&self) -> String;
    fn vocab_size(&self) -> usize;
    fn tokenize(&self, text: &str, max_len: usize) -> TokenSequence;
}

/// Splits text into surface units: runs of identifier characters, and every
/// other non-whitespace character on its own.
pub fn surface_tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_ident_continue(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = word_start.take() {
            out.push(&text[start..i]);
        }
        if !c.is_whitespace() {
            out.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(start) = word_start {
        out.push(&text[start..]);
    }
    out
}

/// Joins surface tokens with single spaces; re-splitting gives them back.
pub fn detokenize(surface: &[String]) -> String {
    surface.join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = sorted.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), (i + RESERVED) as u32)).collect();
        Vocabulary { tokens, index }
    }

    /// Total id space, reserved ids included.
    pub fn len(&self) -> usize {
        self.tokens.len() + RESERVED
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        match id {
            BOS_ID => Some(BOS),
            EOS_ID => Some(EOS),
            UNK_ID => Some(UNK),
            _ => self.tokens.get(id as usize - RESERVED).map(String::as_str),
        }
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line; line `n` (0-based) holds id `n + 3`.
    pub fn to_file_string(&self) -> String {
        self.tokens.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let tokens: Vec<String> = text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), (i + RESERVED) as u32)).collect();
        Vocabulary { tokens, index }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        crate::io::write_atomic(path, self.to_file_string().as_bytes())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }
}

/// Collects every surface token of the texts, sorted lexicographically.
pub fn build_reference_vocab<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vocabulary {
    let mut all = BTreeSet::new();
    for text in texts {
        all.extend(surface_tokens(text));
    }
    Vocabulary::from_tokens(all)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceTokenizer {
    vocab: Vocabulary,
}

impl ReferenceTokenizer {
    pub fn new(vocab: Vocabulary) -> Self {
        ReferenceTokenizer { vocab }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }
}

impl SequenceTokenizer for ReferenceTokenizer {
    fn identity(&self) -> String {
        format!("reference-surface/1 vocab={}", self.vocab.len())
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn tokenize(&self, text: &str, max_len: usize) -> TokenSequence {
        let body = surface_tokens(text);
        let ids = body.iter().map(|t| self.vocab.id(t)).collect();
        let mut seq = TokenSequence::wrap(ids, max_len, BOS_ID, EOS_ID);
        let kept = seq.ids.len() - 2;
        let surface = std::iter::once(BOS)
            .chain(body.into_iter().take(kept))
            .chain(std::iter::once(EOS))
            .map(str::to_string)
            .collect();
        seq.surface = Some(surface);
        seq
    }
}
