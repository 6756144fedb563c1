use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexer::{lexer_for, LexError};
use super::rules::{self, RuleError};
use crate::snippet::{Origin, Snippet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassRename {
    Keep,
    /// Human class name replaced by the name used in the paired generated snippet.
    CounterpartName,
    /// Human class name replaced by a name a person chose from the task text.
    HumanChosenName,
}

/// A named combination of rewriting rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub name: String,
    pub strip_package_decl: bool,
    pub strip_self_imports: bool,
    pub strip_comments: bool,
    pub strip_all_imports: bool,
    pub strip_formatting: bool,
    pub class_rename: ClassRename,
    #[serde(default)]
    pub project_prefixes: Vec<String>,
}

pub const PRESET_NAMES: [&str; 8] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"];

impl PreprocessConfig {
    /// Code kept as is.
    pub fn identity(name: impl Into<String>) -> Self {
        PreprocessConfig {
            name: name.into(),
            strip_package_decl: false,
            strip_self_imports: false,
            strip_comments: false,
            strip_all_imports: false,
            strip_formatting: false,
            class_rename: ClassRename::Keep,
            project_prefixes: Vec::new(),
        }
    }

    /// One of the eight cumulative presets `C1`..`C8` (case-insensitive).
    pub fn preset(name: &str) -> Option<Self> {
        let level = PRESET_NAMES.iter().position(|p| p.eq_ignore_ascii_case(name))? + 1;
        let mut c = PreprocessConfig::identity(PRESET_NAMES[level - 1]);
        c.strip_package_decl = level >= 2;
        c.strip_self_imports = level >= 3;
        c.strip_comments = level >= 4;
        c.class_rename = match level {
            5 => ClassRename::CounterpartName,
            6..=8 => ClassRename::HumanChosenName,
            _ => ClassRename::Keep,
        };
        c.strip_all_imports = level >= 7;
        c.strip_formatting = level >= 8;
        Some(c)
    }

    pub fn presets() -> Vec<Self> {
        PRESET_NAMES.iter().map(|n| Self::preset(n).unwrap()).collect()
    }

    pub fn with_project_prefixes(mut self, prefixes: Vec<String>) -> Self {
        self.project_prefixes = prefixes;
        self
    }

    pub fn needs_rename_map(&self) -> bool {
        self.class_rename != ClassRename::Keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenameProvenance {
    Counterpart,
    Human,
}

impl RenameProvenance {
    fn serves(self, rename: ClassRename) -> bool {
        matches!(
            (self, rename),
            (RenameProvenance::Counterpart, ClassRename::CounterpartName)
                | (RenameProvenance::Human, ClassRename::HumanChosenName)
        )
    }
}

#[derive(Debug, Error)]
pub enum RenameMapError {
    #[error("line {line}: expected `pairing_key<TAB>class_name`")]
    Malformed { line: usize },
    #[error("line {line}: `{name}` is not a valid class name")]
    InvalidName { line: usize, name: String },
    #[error("line {line}: pairing key `{key}` listed twice")]
    DuplicateKey { line: usize, key: String },
    #[error("reading rename map: {0}")]
    Io(#[from] std::io::Error),
}

/// Replacement class names keyed by pairing key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameMap {
    entries: BTreeMap<String, String>,
    provenance: RenameProvenance,
}

impl RenameMap {
    pub fn new(provenance: RenameProvenance) -> Self {
        RenameMap { entries: BTreeMap::new(), provenance }
    }

    pub fn insert(&mut self, pairing_key: impl Into<String>, name: impl Into<String>) -> Result<(), RenameMapError> {
        let name = name.into();
        if !rules::is_valid_class_name(&name) {
            return Err(RenameMapError::InvalidName { line: 0, name });
        }
        self.entries.insert(pairing_key.into(), name);
        Ok(())
    }

    pub fn get(&self, pairing_key: &str) -> Option<&str> {
        self.entries.get(pairing_key).map(String::as_str)
    }

    pub fn provenance(&self) -> RenameProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses the tab-separated `pairing_key<TAB>new_class_name` format.
    /// Blank lines are skipped.
    pub fn parse(text: &str, provenance: RenameProvenance) -> Result<Self, RenameMapError> {
        let mut map = RenameMap::new(provenance);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (key, name) = raw.split_once('\t').ok_or(RenameMapError::Malformed { line })?;
            let (key, name) = (key.trim(), name.trim());
            if key.is_empty() {
                return Err(RenameMapError::Malformed { line });
            }
            if !rules::is_valid_class_name(name) {
                return Err(RenameMapError::InvalidName { line, name: name.to_string() });
            }
            if map.entries.insert(key.to_string(), name.to_string()).is_some() {
                return Err(RenameMapError::DuplicateKey { line, key: key.to_string() });
            }
        }
        Ok(map)
    }

    pub fn from_file(path: &Path, provenance: RenameProvenance) -> Result<Self, RenameMapError> {
        Self::parse(&std::fs::read_to_string(path)?, provenance)
    }

    pub fn to_file_string(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }

    /// Builds the counterpart map: for each pairing key, the primary class name
    /// of its generated snippet (lowest id when a task has several).
    pub fn from_counterparts<'a>(snippets: impl IntoIterator<Item = &'a Snippet>) -> Result<Self, ExtractError> {
        let mut chosen: BTreeMap<String, (&str, String)> = BTreeMap::new();
        for s in snippets {
            let (Origin::Chatgpt, Some(key)) = (s.origin(), s.pairing_key()) else { continue };
            let name = rules::primary_type_name(s.text())
                .map_err(|e| ExtractError::new(s.id(), RuleError::from(e)))?;
            let Some(name) = name else { continue };
            match chosen.get(key) {
                Some((id, _)) if *id <= s.id() => {}
                _ => {
                    chosen.insert(key.to_string(), (s.id(), name));
                }
            }
        }
        let entries = chosen.into_iter().map(|(k, (_, name))| (k, name)).collect();
        Ok(RenameMap { entries, provenance: RenameProvenance::Counterpart })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractErrorKind {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("configuration `{config}` renames classes but no rename map was given")]
    MissingRenameMap { config: String },
    #[error("rename map is {found:?}-provided but configuration `{config}` needs {wanted:?} names")]
    WrongRenameProvenance { config: String, found: RenameProvenance, wanted: ClassRename },
    #[error("rename map has no entry for pairing key `{0}`")]
    MissingRenameEntry(String),
    #[error("snippet has no pairing key, cannot look up its replacement class name")]
    MissingPairingKey,
    #[error("no lexer for language `{0}`")]
    UnsupportedLanguage(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("snippet `{snippet_id}`: {kind}")]
pub struct ExtractError {
    pub snippet_id: String,
    pub kind: ExtractErrorKind,
}

impl ExtractError {
    pub fn new(snippet_id: &str, kind: impl Into<ExtractErrorKind>) -> Self {
        ExtractError { snippet_id: snippet_id.to_string(), kind: kind.into() }
    }
}

impl From<LexError> for ExtractErrorKind {
    fn from(e: LexError) -> Self {
        ExtractErrorKind::Rule(RuleError::Lex(e))
    }
}

/// Applies a configuration's rules in the fixed order: package declaration,
/// imports, comments, class rename, formatting.
///
/// Class renaming only touches human-written snippets; generated snippets are
/// the reference the human names are aligned to.
pub fn apply_config(snippet: &Snippet, config: &PreprocessConfig, rename_map: Option<&RenameMap>) -> Result<Snippet, ExtractError> {
    let fail = |kind: ExtractErrorKind| ExtractError::new(snippet.id(), kind);
    if lexer_for(snippet.language()).is_none() {
        return Err(fail(ExtractErrorKind::UnsupportedLanguage(snippet.language().to_string())));
    }

    let rename_to = if config.needs_rename_map() && snippet.origin() == Origin::Human {
        let map = rename_map.ok_or_else(|| fail(ExtractErrorKind::MissingRenameMap { config: config.name.clone() }))?;
        if !map.provenance().serves(config.class_rename) {
            return Err(fail(ExtractErrorKind::WrongRenameProvenance {
                config: config.name.clone(),
                found: map.provenance(),
                wanted: config.class_rename,
            }));
        }
        let key = snippet.pairing_key().ok_or_else(|| fail(ExtractErrorKind::MissingPairingKey))?;
        Some(map.get(key).ok_or_else(|| fail(ExtractErrorKind::MissingRenameEntry(key.to_string())))?)
    } else {
        None
    };

    let run = |text: String| -> Result<String, ExtractError> {
        let mut text = text;
        let package_root = if config.strip_self_imports && !config.strip_all_imports {
            rules::declared_package_root(&text).map_err(|e| fail(e.into()))?
        } else {
            None
        };
        if config.strip_package_decl {
            text = rules::strip_package_declaration(&text).map_err(|e| fail(e.into()))?;
        }
        if config.strip_all_imports {
            text = rules::strip_all_imports(&text).map_err(|e| fail(e.into()))?;
        } else if config.strip_self_imports {
            text = rules::strip_self_imports_with_root(&text, &config.project_prefixes, package_root.as_deref())
                .map_err(|e| fail(e.into()))?;
        }
        if config.strip_comments {
            text = rules::strip_comments(&text).map_err(|e| fail(e.into()))?;
        }
        if let Some(name) = rename_to {
            text = rules::rename_primary_class(&text, name).map_err(|e| fail(e.into()))?;
        }
        if config.strip_formatting {
            text = rules::strip_formatting(&text).map_err(|e| fail(e.into()))?;
        }
        Ok(text)
    };

    let text = run(snippet.text().to_string())?;
    Ok(snippet.with_text(text))
}

impl fmt::Display for PreprocessConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_cumulative() {
        let p = PreprocessConfig::presets();
        let flags = |c: &PreprocessConfig| {
            (c.strip_package_decl, c.strip_self_imports, c.strip_comments, c.strip_all_imports, c.strip_formatting, c.class_rename)
        };
        use ClassRename::*;
        let expected = [
            (false, false, false, false, false, Keep),
            (true, false, false, false, false, Keep),
            (true, true, false, false, false, Keep),
            (true, true, true, false, false, Keep),
            (true, true, true, false, false, CounterpartName),
            (true, true, true, false, false, HumanChosenName),
            (true, true, true, true, false, HumanChosenName),
            (true, true, true, true, true, HumanChosenName),
        ];
        for (c, e) in p.iter().zip(expected) {
            assert_eq!(flags(c), e, "{}", c.name);
        }
        assert_eq!(PreprocessConfig::preset("c4").unwrap().name, "C4");
        assert!(PreprocessConfig::preset("C9").is_none());
    }

    #[test]
    fn rename_map_parsing() {
        let map = RenameMap::parse("ex17_06\tSubstringFinder\n\nex01\tHello\n", RenameProvenance::Human).unwrap();
        assert_eq!(map.get("ex17_06"), Some("SubstringFinder"));
        assert_eq!(map.len(), 2);
        assert!(matches!(
            RenameMap::parse("k\t1abc\n", RenameProvenance::Human),
            Err(RenameMapError::InvalidName { line: 1, .. })
        ));
        assert!(matches!(RenameMap::parse("no tab\n", RenameProvenance::Human), Err(RenameMapError::Malformed { line: 1 })));
        assert!(matches!(
            RenameMap::parse("k\tA\nk\tB\n", RenameProvenance::Human),
            Err(RenameMapError::DuplicateKey { line: 2, .. })
        ));
    }

    #[test]
    fn counterpart_map_uses_generated_class_names() {
        let snippets = vec![
            Snippet::new("h1", Origin::Human, Some("t1".into()), "class Exercise01 {}"),
            Snippet::new("g1b", Origin::Chatgpt, Some("t1".into()), "class Second {}"),
            Snippet::new("g1a", Origin::Chatgpt, Some("t1".into()), "public class Main {}"),
            Snippet::new("g2", Origin::Chatgpt, Some("t2".into()), "int x;"),
        ];
        let map = RenameMap::from_counterparts(&snippets).unwrap();
        assert_eq!(map.get("t1"), Some("Main"));
        assert_eq!(map.get("t2"), None);
        assert_eq!(map.provenance(), RenameProvenance::Counterpart);
    }

    #[test]
    fn c1_is_byte_identity() {
        let s = Snippet::new("a", Origin::Human, None, "package p;\n// c\nclass A {\n\tint x;\n}\n");
        assert_eq!(apply_config(&s, &PreprocessConfig::preset("C1").unwrap(), None).unwrap(), s);
    }

    #[test]
    fn rename_requires_map_for_human_only() {
        let c5 = PreprocessConfig::preset("C5").unwrap();
        let human = Snippet::new("h", Origin::Human, Some("k".into()), "class Ex1 {}");
        let generated = Snippet::new("g", Origin::Chatgpt, Some("k".into()), "class Main {}");
        let err = apply_config(&human, &c5, None).unwrap_err();
        assert_eq!(err.snippet_id, "h");
        assert!(matches!(err.kind, ExtractErrorKind::MissingRenameMap { .. }));
        assert_eq!(apply_config(&generated, &c5, None).unwrap().text(), "class Main {}");

        let map = RenameMap::from_counterparts([&generated]).unwrap();
        assert_eq!(apply_config(&human, &c5, Some(&map)).unwrap().text(), "class Main {}");

        let c6 = PreprocessConfig::preset("C6").unwrap();
        assert!(matches!(
            apply_config(&human, &c6, Some(&map)).unwrap_err().kind,
            ExtractErrorKind::WrongRenameProvenance { .. }
        ));
        let empty = RenameMap::new(RenameProvenance::Counterpart);
        assert_eq!(
            apply_config(&human, &c5, Some(&empty)).unwrap_err().kind,
            ExtractErrorKind::MissingRenameEntry("k".into())
        );
    }

    #[test]
    fn lex_errors_carry_snippet_id() {
        let s = Snippet::new("broken", Origin::Chatgpt, None, "class A { /* open");
        let err = apply_config(&s, &PreprocessConfig::preset("C4").unwrap(), None).unwrap_err();
        assert_eq!(err.snippet_id, "broken");
        assert!(err.to_string().contains("unterminated block comment"));
    }

    #[test]
    fn unsupported_language_rejected() {
        let s = Snippet::new("py", Origin::Human, None, "x = 1").with_language("python");
        let err = apply_config(&s, &PreprocessConfig::preset("C1").unwrap(), None).unwrap_err();
        assert_eq!(err.kind, ExtractErrorKind::UnsupportedLanguage("python".into()));
    }

    #[test]
    fn self_imports_use_root_of_stripped_package() {
        let s = Snippet::new(
            "h",
            Origin::Human,
            None,
            "package ch_17.exercise17_06;\n\nimport ch_17.exercise17_01.Exercise17_01;\nimport java.util.Scanner;\n",
        );
        let out = apply_config(&s, &PreprocessConfig::preset("C3").unwrap(), None).unwrap();
        assert_eq!(out.text(), "\nimport java.util.Scanner;\n");
    }
}
