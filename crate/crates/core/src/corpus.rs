//! Labeled snippet collections: manifest ingestion, pairing, mixing and
//! count validation.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snippet::{Origin, Snippet, DEFAULT_LANGUAGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Independently collected human and generated snippets.
    UnpairedU,
    /// Human and generated solutions of the same tasks.
    PairedP,
    /// Reshuffled union of unpaired and paired snippets.
    MixedDalpha,
    /// The paired collection used as a dataset on its own.
    PairedDbeta,
    Custom,
}

impl Provenance {
    pub fn is_paired(self) -> bool {
        matches!(self, Provenance::PairedP | Provenance::PairedDbeta)
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "unpaired" | "unpaired_u" | "u" => Provenance::UnpairedU,
            "paired" | "paired_p" | "p" => Provenance::PairedP,
            "mixed" | "mixed_dalpha" | "dalpha" => Provenance::MixedDalpha,
            "paired_dbeta" | "dbeta" => Provenance::PairedDbeta,
            "custom" => Provenance::Custom,
            other => return Err(format!("unknown corpus provenance `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginCounts {
    pub human: usize,
    pub chatgpt: usize,
}

impl OriginCounts {
    pub fn new(human: usize, chatgpt: usize) -> Self {
        OriginCounts { human, chatgpt }
    }

    pub fn get(&self, origin: Origin) -> usize {
        match origin {
            Origin::Human => self.human,
            Origin::Chatgpt => self.chatgpt,
        }
    }

    pub fn total(&self) -> usize {
        self.human + self.chatgpt
    }

    fn bump(&mut self, origin: Origin) {
        match origin {
            Origin::Human => self.human += 1,
            Origin::Chatgpt => self.chatgpt += 1,
        }
    }

    pub fn of<'a>(snippets: impl IntoIterator<Item = &'a Snippet>) -> Self {
        let mut c = OriginCounts::default();
        for s in snippets {
            c.bump(s.origin());
        }
        c
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate snippet id `{0}`")]
    DuplicateId(String),
    #[error("manifest line {line}: {source}")]
    UnknownLabel { line: usize, source: crate::snippet::UnknownLabel },
    #[error("manifest line {line}: {message}")]
    MalformedManifest { line: usize, message: String },
    #[error("cannot read snippet `{id}` from {path}: {source}")]
    Unreadable { id: String, path: PathBuf, source: std::io::Error },
    #[error("cannot read manifest {path}: {source}")]
    ManifestUnreadable { path: PathBuf, source: std::io::Error },
    #[error("snippet `{0}` has no pairing key but the corpus is paired")]
    MissingPairingKey(String),
    #[error("corpus is not paired (provenance {0:?})")]
    NotPaired(Provenance),
    #[error("pairing keys present for only one origin: {}", .0.join(", "))]
    UnmatchedPairs(Vec<String>),
}

/// An immutable, id-unique collection of labeled snippets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    snippets: Vec<Snippet>,
    provenance: Provenance,
    counts: OriginCounts,
}

impl Corpus {
    pub fn new(snippets: Vec<Snippet>, provenance: Provenance) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(snippets.len());
        for s in &snippets {
            if !seen.insert(s.id()) {
                return Err(CorpusError::DuplicateId(s.id().to_string()));
            }
            if provenance.is_paired() && s.pairing_key().is_none() {
                return Err(CorpusError::MissingPairingKey(s.id().to_string()));
            }
        }
        let counts = OriginCounts::of(&snippets);
        Ok(Corpus { snippets, provenance, counts })
    }

    pub fn empty(provenance: Provenance) -> Self {
        Corpus { snippets: Vec::new(), provenance, counts: OriginCounts::default() }
    }

    pub fn snippets(&self) -> &[Snippet] {
        &self.snippets
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn counts(&self) -> OriginCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Snippet> {
        self.snippets.iter().find(|s| s.id() == id)
    }

    /// Index from id to snippet, for repeated lookups.
    pub fn by_id(&self) -> BTreeMap<&str, &Snippet> {
        self.snippets.iter().map(|s| (s.id(), s)).collect()
    }

    /// Same corpus with every snippet passed through `f` (ids and labels kept).
    pub fn try_map<E>(&self, f: impl Fn(&Snippet) -> Result<Snippet, E> + Sync + Send) -> Result<Corpus, E>
    where
        E: Send,
    {
        let snippets = self.snippets.par_iter().map(f).collect::<Result<Vec<_>, E>>()?;
        let counts = OriginCounts::of(&snippets);
        Ok(Corpus { snippets, provenance: self.provenance, counts })
    }

    pub fn into_snippets(self) -> Vec<Snippet> {
        self.snippets
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub pairing_key: Option<String>,
    pub path: String,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

/// Parses a JSON-lines manifest. Blank lines are ignored.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::MalformedManifest { line: i + 1, message: e.to_string() })
        })
        .collect()
}

/// Reads every snippet a manifest references, relative to `root`.
///
/// Labels come from the manifest only. Files are read in parallel.
pub fn ingest_corpus(root: &Path, manifest: &[ManifestRecord], provenance: Provenance) -> Result<Corpus, CorpusError> {
    let mut seen = HashSet::new();
    for (i, rec) in manifest.iter().enumerate() {
        if !seen.insert(rec.id.as_str()) {
            return Err(CorpusError::DuplicateId(rec.id.clone()));
        }
        rec.label.parse::<Origin>().map_err(|source| CorpusError::UnknownLabel { line: i + 1, source })?;
    }
    let snippets = manifest
        .par_iter()
        .map(|rec| {
            let path = root.join(&rec.path);
            let text = std::fs::read_to_string(&path)
                .map_err(|source| CorpusError::Unreadable { id: rec.id.clone(), path: path.clone(), source })?;
            let origin = rec.label.parse::<Origin>().expect("labels validated above");
            let snippet = Snippet::new(rec.id.clone(), origin, rec.pairing_key.clone(), text);
            Ok(match &rec.language {
                Some(lang) if lang != DEFAULT_LANGUAGE => snippet.with_language(lang.clone()),
                _ => snippet,
            })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    Corpus::new(snippets, provenance)
}

/// Reads a manifest file and ingests it; relative paths resolve against the
/// manifest's directory unless `root` is given.
pub fn ingest_manifest_file(manifest_path: &Path, root: Option<&Path>, provenance: Provenance) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|source| CorpusError::ManifestUnreadable { path: manifest_path.to_path_buf(), source })?;
    let records = parse_manifest(&text)?;
    let root = match root {
        Some(r) => r.to_path_buf(),
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    ingest_corpus(&root, &records, provenance)
}

/// Snippets of all origins that solve the same task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairGroup {
    pub pairing_key: String,
    pub human_snippets: Vec<String>,
    pub chatgpt_snippets: Vec<String>,
}

impl PairGroup {
    pub fn len(&self) -> usize {
        self.human_snippets.len() + self.chatgpt_snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Groups snippet ids by pairing key, members sorted by id. Snippets without
/// a key are ignored.
pub(crate) fn group_by_key(snippets: &[Snippet]) -> BTreeMap<String, PairGroup> {
    let mut groups: BTreeMap<String, PairGroup> = BTreeMap::new();
    for s in snippets {
        let Some(key) = s.pairing_key() else { continue };
        let g = groups.entry(key.to_string()).or_insert_with(|| PairGroup {
            pairing_key: key.to_string(),
            human_snippets: Vec::new(),
            chatgpt_snippets: Vec::new(),
        });
        match s.origin() {
            Origin::Human => g.human_snippets.push(s.id().to_string()),
            Origin::Chatgpt => g.chatgpt_snippets.push(s.id().to_string()),
        }
    }
    for g in groups.values_mut() {
        g.human_snippets.sort();
        g.chatgpt_snippets.sort();
    }
    groups
}

/// One group per pairing key of a paired corpus, in key order.
///
/// Keys seen for only one origin are an error unless `drop_unmatched` is set,
/// in which case those groups are left out.
pub fn pair_snippets(corpus: &Corpus, drop_unmatched: bool) -> Result<Vec<PairGroup>, CorpusError> {
    if !corpus.provenance().is_paired() {
        return Err(CorpusError::NotPaired(corpus.provenance()));
    }
    let groups = group_by_key(corpus.snippets());
    let (complete, unmatched): (Vec<_>, Vec<_>) = groups
        .into_values()
        .partition(|g| !g.human_snippets.is_empty() && !g.chatgpt_snippets.is_empty());
    if !unmatched.is_empty() && !drop_unmatched {
        return Err(CorpusError::UnmatchedPairs(unmatched.into_iter().map(|g| g.pairing_key).collect()));
    }
    Ok(complete)
}

/// Union of an unpaired and a paired corpus, deterministically shuffled.
///
/// The order depends only on the set of ids and the seed, not on the input
/// order.
pub fn mix_datasets(unpaired: &Corpus, paired: &Corpus, seed: u64) -> Result<Corpus, CorpusError> {
    let mut all: Vec<Snippet> = unpaired.snippets().iter().chain(paired.snippets()).cloned().collect();
    all.sort_by(|a, b| a.id().cmp(b.id()));
    if let Some(w) = all.windows(2).find(|w| w[0].id() == w[1].id()) {
        return Err(CorpusError::DuplicateId(w[0].id().to_string()));
    }
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Corpus::new(all, Provenance::MixedDalpha)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCheck {
    pub origin: Origin,
    pub expected: usize,
    pub actual: usize,
    /// `expected - actual`.
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountValidation {
    pub checks: Vec<CountCheck>,
    pub mismatches: usize,
    pub passed: bool,
}

pub fn validate_counts(corpus: &Corpus, expected: OriginCounts) -> CountValidation {
    let checks: Vec<CountCheck> = Origin::ALL
        .iter()
        .map(|&origin| {
            let (e, a) = (expected.get(origin), corpus.counts().get(origin));
            CountCheck { origin, expected: e, actual: a, delta: e as i64 - a as i64 }
        })
        .collect();
    let mismatches = checks.iter().filter(|c| c.delta != 0).count();
    CountValidation { checks, mismatches, passed: mismatches == 0 }
}
