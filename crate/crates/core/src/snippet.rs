use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ground-truth provenance of a snippet. The declaration order is the fixed
/// class order used by models and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Human,
    Chatgpt,
}

impl Origin {
    pub const ALL: [Origin; 2] = [Origin::Human, Origin::Chatgpt];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Human => "human",
            Origin::Chatgpt => "chatgpt",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Origin {
        match self {
            Origin::Human => Origin::Chatgpt,
            Origin::Chatgpt => Origin::Human,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}` (expected `human` or `chatgpt`)")]
pub struct UnknownLabel(pub String);

impl FromStr for Origin {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "human" => Ok(Origin::Human),
            "chatgpt" => Ok(Origin::Chatgpt),
            other => Err(UnknownLabel(other.to_string())),
        }
    }
}

/// One labeled code sample.
///
/// `char_count` and `loc` are derived from the text and kept in sync by every
/// constructor, so they are read-only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    id: String,
    origin: Origin,
    pairing_key: Option<String>,
    text: String,
    language: String,
    char_count: usize,
    loc: usize,
}

pub const DEFAULT_LANGUAGE: &str = "java";

impl Snippet {
    pub fn new(id: impl Into<String>, origin: Origin, pairing_key: Option<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Snippet {
            id: id.into(),
            origin,
            pairing_key,
            char_count: text.chars().count(),
            loc: line_count(&text),
            text,
            language: DEFAULT_LANGUAGE.to_string(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn pairing_key(&self) -> Option<&str> {
        self.pairing_key.as_deref()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn char_count(&self) -> usize {
        self.char_count
    }

    pub fn loc(&self) -> usize {
        self.loc
    }

    /// Same identity and label, new text.
    pub fn with_text(&self, text: impl Into<String>) -> Snippet {
        let mut s = Snippet::new(self.id.clone(), self.origin, self.pairing_key.clone(), text);
        s.language = self.language.clone();
        s
    }

    pub fn with_origin(&self, origin: Origin) -> Snippet {
        Snippet { origin, ..self.clone() }
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Snippet {
        self.language = language.into();
        self
    }
}

/// 1 + number of `\n` for nonempty text, 0 for empty text.
pub fn line_count(text: &str) -> usize {
    if text.is_empty() {
        0
    } else {
        1 + text.bytes().filter(|&b| b == b'\n').count()
    }
}
