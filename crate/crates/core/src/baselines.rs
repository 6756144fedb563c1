//! External AI-text detectors used as baselines: verdict mapping, length
//! constrained selection, and replayed or live querying.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::{evaluate, EvalReport, MetricsError, ReportTags};
use crate::snippet::{Origin, Snippet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineId {
    Gptzero,
    OpenaiClassifier,
}

impl BaselineId {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineId::Gptzero => "gptzero",
            BaselineId::OpenaiClassifier => "openai_classifier",
        }
    }

    /// Selection bounds each detector accepts.
    pub fn default_constraint(self) -> LengthConstraint {
        match self {
            BaselineId::Gptzero => LengthConstraint { min_chars: 250, max_chars: Some(5000) },
            BaselineId::OpenaiClassifier => LengthConstraint { min_chars: 1000, max_chars: None },
        }
    }
}

impl fmt::Display for BaselineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineId {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gptzero" => Ok(BaselineId::Gptzero),
            "openai_classifier" | "openai" => Ok(BaselineId::OpenaiClassifier),
            _ => Err(BaselineError::UnknownBaseline(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("unknown baseline {0:?} (expected gptzero or openai_classifier)")]
    UnknownBaseline(String),
    #[error("{baseline} answer not recognised: {text:?}")]
    UnmappedVerdict { baseline: BaselineId, text: String },
    #[error("invalid length constraint: {0}")]
    InvalidConstraint(String),
    #[error("need {needed} eligible snippets per class, found {human} human and {chatgpt} chatgpt")]
    InsufficientEligible { needed: usize, human: usize, chatgpt: usize },
    #[error("no recorded answer for snippet {0}")]
    ReplayMiss(String),
    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("environment variable {0} holding the API token is not set")]
    MissingToken(String),
    #[error("request for snippet {snippet_id} failed after {attempts} attempts: {message}")]
    Transport { snippet_id: String, attempts: u32, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Ordered answer-text rules; the first exact match after whitespace
/// normalization decides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictMapping {
    pub baseline: BaselineId,
    pub rules: Vec<(String, Origin)>,
}

impl VerdictMapping {
    pub fn for_baseline(baseline: BaselineId) -> Self {
        let rules: &[(&str, Origin)] = match baseline {
            BaselineId::Gptzero => &[
                ("Your text is likely to be written entirely by a human", Origin::Human),
                ("Your text is most likely human written but there are some sentences with low perplexities", Origin::Human),
                ("Your text is likely to be written entirely by AI", Origin::Chatgpt),
                ("Your text may include parts written by AI", Origin::Chatgpt),
            ],
            BaselineId::OpenaiClassifier => &[
                ("The classifier considers the text to be unclear if it is AI-generated", Origin::Human),
                ("The classifier considers the text to be unlikely AI-generated", Origin::Human),
                ("The classifier considers the text to be likely AI-generated", Origin::Chatgpt),
                ("The classifier considers the text to be possibly AI-generated", Origin::Chatgpt),
            ],
        };
        VerdictMapping { baseline, rules: rules.iter().map(|(t, o)| (t.to_string(), *o)).collect() }
    }

    pub fn map(&self, answer_text: &str) -> Result<Origin, BaselineError> {
        let answer = normalize_whitespace(answer_text);
        self.rules
            .iter()
            .find(|(pattern, _)| normalize_whitespace(pattern) == answer)
            .map(|(_, label)| *label)
            .ok_or_else(|| BaselineError::UnmappedVerdict { baseline: self.baseline, text: answer_text.to_string() })
    }
}

pub fn map_verdict(baseline: BaselineId, answer_text: &str) -> Result<Origin, BaselineError> {
    VerdictMapping::for_baseline(baseline).map(answer_text)
}

/// Eligible snippets have strictly more than `min_chars` characters and at
/// most `max_chars` when an upper bound is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthConstraint {
    pub min_chars: usize,
    pub max_chars: Option<usize>,
}

impl LengthConstraint {
    pub fn new(min_chars: usize, max_chars: Option<usize>) -> Result<Self, BaselineError> {
        if let Some(max) = max_chars {
            if max <= min_chars {
                return Err(BaselineError::InvalidConstraint(format!("max_chars {max} must exceed min_chars {min_chars}")));
            }
        }
        Ok(LengthConstraint { min_chars, max_chars })
    }

    pub fn admits(&self, snippet: &Snippet) -> bool {
        let n = snippet.char_count();
        n > self.min_chars && self.max_chars.is_none_or(|max| n <= max)
    }
}

/// Draws `n_per_class` eligible snippets of each class. Candidates are
/// ordered by id before the seeded shuffle, so corpus order is irrelevant.
/// The result is sorted by id.
pub fn select_comparison_set(corpus: &Corpus, constraint: &LengthConstraint, n_per_class: usize, seed: u64) -> Result<Vec<Snippet>, BaselineError> {
    let mut pools: Vec<Vec<&Snippet>> = Origin::ALL
        .iter()
        .map(|&o| {
            let mut pool: Vec<&Snippet> = corpus.snippets().iter().filter(|s| s.origin() == o && constraint.admits(s)).collect();
            pool.sort_by(|a, b| a.id().cmp(b.id()));
            pool
        })
        .collect();
    let (human, chatgpt) = (pools[0].len(), pools[1].len());
    if human < n_per_class || chatgpt < n_per_class {
        return Err(BaselineError::InsufficientEligible { needed: n_per_class, human, chatgpt });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<Snippet> = Vec::with_capacity(2 * n_per_class);
    for pool in pools.iter_mut() {
        pool.shuffle(&mut rng);
        chosen.extend(pool.iter().take(n_per_class).map(|s| (*s).clone()));
    }
    chosen.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub snippet_id: String,
    pub answer_text: String,
}

pub fn read_fixture(path: &Path) -> Result<Vec<FixtureRow>, BaselineError> {
    let err = |message: String| BaselineError::Fixture { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    reader.deserialize().map(|r| r.map_err(|e| err(e.to_string()))).collect()
}

pub fn fixture_to_string(rows: &[FixtureRow]) -> String {
    let mut writer = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::NonNumeric).from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("utf-8 fields")
}

pub fn write_fixture(path: &Path, rows: &[FixtureRow]) -> Result<(), BaselineError> {
    crate::io::write_atomic(path, fixture_to_string(rows).as_bytes())
        .map_err(|e| BaselineError::Fixture { path: path.to_path_buf(), message: e.to_string() })
}

/// Source of detector answers.
pub trait BaselineClient {
    fn query(&self, snippet: &Snippet) -> Result<String, BaselineError>;
}

pub fn query_baseline(client: &dyn BaselineClient, snippet: &Snippet) -> Result<String, BaselineError> {
    client.query(snippet)
}

/// Answers recorded in an earlier session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayClient {
    answers: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn from_rows(rows: impl IntoIterator<Item = FixtureRow>) -> Self {
        ReplayClient { answers: rows.into_iter().map(|r| (r.snippet_id, r.answer_text)).collect() }
    }

    pub fn from_file(path: &Path) -> Result<Self, BaselineError> {
        Ok(Self::from_rows(read_fixture(path)?))
    }

    pub fn answer(&self, snippet_id: &str) -> Result<&str, BaselineError> {
        self.answers.get(snippet_id).map(String::as_str).ok_or_else(|| BaselineError::ReplayMiss(snippet_id.to_string()))
    }
}

impl BaselineClient for ReplayClient {
    fn query(&self, snippet: &Snippet) -> Result<String, BaselineError> {
        self.answer(snippet.id()).map(str::to_string)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub endpoint: String,
    /// Environment variable holding a bearer token; no header when `None`.
    pub token_env: Option<String>,
    pub min_interval_ms: u64,
    pub max_attempts: u32,
    pub timeout_ms: u64,
    /// Field of the JSON request body carrying the snippet text.
    pub text_field: String,
    /// JSON pointer to the answer text in the response.
    pub answer_pointer: String,
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        LiveConfig {
            endpoint: endpoint.into(),
            token_env: None,
            min_interval_ms: 1000,
            max_attempts: 3,
            timeout_ms: 30_000,
            text_field: "document".into(),
            answer_pointer: "/answer".into(),
        }
    }
}

/// Queries a detector over HTTP, one request at a time with a minimum gap
/// between requests, and records every answer to a fixture file.
pub struct LiveClient {
    config: LiveConfig,
    token: Option<String>,
    http: reqwest::blocking::Client,
    state: Mutex<LiveState>,
    fixture: PathBuf,
}

struct LiveState {
    last_request: Option<Instant>,
    recorded: BTreeMap<String, String>,
}

impl LiveClient {
    /// Existing rows of `fixture` are kept and extended.
    pub fn new(config: LiveConfig, fixture: &Path) -> Result<Self, BaselineError> {
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| BaselineError::MissingToken(var.clone()))?),
            None => None,
        };
        let recorded = if fixture.exists() { ReplayClient::from_file(fixture)?.answers } else { BTreeMap::new() };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BaselineError::Transport { snippet_id: String::new(), attempts: 0, message: e.to_string() })?;
        Ok(LiveClient { config, token, http, state: Mutex::new(LiveState { last_request: None, recorded }), fixture: fixture.to_path_buf() })
    }

    fn attempt(&self, snippet: &Snippet) -> Result<String, String> {
        let mut request = self.http.post(&self.config.endpoint).json(&serde_json::json!({ &self.config.text_field: snippet.text() }));
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        let body: serde_json::Value = response.json().map_err(|e| e.to_string())?;
        body.pointer(&self.config.answer_pointer)
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| format!("response has no string at {}", self.config.answer_pointer))
    }
}

impl BaselineClient for LiveClient {
    fn query(&self, snippet: &Snippet) -> Result<String, BaselineError> {
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let gap = Duration::from_millis(self.config.min_interval_ms);
        let attempts = self.config.max_attempts.max(1);
        let mut last_error = String::new();
        for _ in 0..attempts {
            if let Some(last) = state.last_request {
                let elapsed = last.elapsed();
                if elapsed < gap {
                    std::thread::sleep(gap - elapsed);
                }
            }
            state.last_request = Some(Instant::now());
            match self.attempt(snippet) {
                Ok(answer) => {
                    state.recorded.insert(snippet.id().to_string(), answer.clone());
                    let rows: Vec<FixtureRow> = state
                        .recorded
                        .iter()
                        .map(|(id, a)| FixtureRow { snippet_id: id.clone(), answer_text: a.clone() })
                        .collect();
                    write_fixture(&self.fixture, &rows)?;
                    return Ok(answer);
                }
                Err(e) => last_error = e,
            }
        }
        Err(BaselineError::Transport { snippet_id: snippet.id().to_string(), attempts, message: last_error })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselinePrediction {
    pub snippet_id: String,
    pub truth: Origin,
    pub answer_text: String,
    pub label: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub baseline: BaselineId,
    pub correct: usize,
    pub total: usize,
    pub report: EvalReport,
    /// Count per answer text, in mapping-rule order.
    pub verdicts: Vec<(String, Origin, usize)>,
    pub predictions: Vec<BaselinePrediction>,
}

/// Maps every selected snippet's answer and scores it against the truth.
pub fn score_answers(baseline: BaselineId, snippets: &[Snippet], client: &dyn BaselineClient, dataset: &str) -> Result<BaselineScore, BaselineError> {
    let mapping = VerdictMapping::for_baseline(baseline);
    let predictions = snippets
        .iter()
        .map(|s| {
            let answer_text = client.query(s)?;
            let label = mapping.map(&answer_text)?;
            Ok(BaselinePrediction { snippet_id: s.id().to_string(), truth: s.origin(), answer_text, label })
        })
        .collect::<Result<Vec<_>, BaselineError>>()?;
    let truth: Vec<Origin> = predictions.iter().map(|p| p.truth).collect();
    let labels: Vec<Origin> = predictions.iter().map(|p| p.label).collect();
    let tags = ReportTags { dataset: dataset.to_string(), config: baseline.to_string(), backend: baseline.to_string(), seed: 0 };
    let report = evaluate(&truth, &labels, tags)?;
    let verdicts = mapping
        .rules
        .iter()
        .map(|(text, label)| {
            let n = predictions.iter().filter(|p| normalize_whitespace(&p.answer_text) == normalize_whitespace(text)).count();
            (text.clone(), *label, n)
        })
        .collect();
    Ok(BaselineScore {
        baseline,
        correct: predictions.iter().filter(|p| p.truth == p.label).count(),
        total: predictions.len(),
        report,
        verdicts,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    const ALL_ANSWERS: [(BaselineId, &str, Origin); 8] = [
        (BaselineId::Gptzero, "Your text is likely to be written entirely by a human", Origin::Human),
        (BaselineId::Gptzero, "Your text is most likely human written but there are some sentences with low perplexities", Origin::Human),
        (BaselineId::Gptzero, "Your text is likely to be written entirely by AI", Origin::Chatgpt),
        (BaselineId::Gptzero, "Your text may include parts written by AI", Origin::Chatgpt),
        (BaselineId::OpenaiClassifier, "The classifier considers the text to be unclear if it is AI-generated", Origin::Human),
        (BaselineId::OpenaiClassifier, "The classifier considers the text to be unlikely AI-generated", Origin::Human),
        (BaselineId::OpenaiClassifier, "The classifier considers the text to be likely AI-generated", Origin::Chatgpt),
        (BaselineId::OpenaiClassifier, "The classifier considers the text to be possibly AI-generated", Origin::Chatgpt),
    ];

    #[test]
    fn maps_every_known_answer() {
        for (baseline, text, label) in ALL_ANSWERS {
            assert_eq!(map_verdict(baseline, text).unwrap(), label, "{text}");
        }
    }

    #[test]
    fn whitespace_is_normalized_but_nothing_else() {
        assert_eq!(map_verdict(BaselineId::Gptzero, "  Your text may include\n parts written  by AI ").unwrap(), Origin::Chatgpt);
        assert!(map_verdict(BaselineId::Gptzero, "your text may include parts written by AI").is_err());
        assert!(map_verdict(BaselineId::Gptzero, "The classifier considers the text to be likely AI-generated").is_err());
        match map_verdict(BaselineId::OpenaiClassifier, "gibberish") {
            Err(BaselineError::UnmappedVerdict { text, .. }) => assert_eq!(text, "gibberish"),
            other => panic!("{other:?}"),
        }
    }

    fn sized(id: &str, origin: Origin, chars: usize) -> Snippet {
        Snippet::new(id, origin, None, "x".repeat(chars))
    }

    fn unpaired(humans: usize, chatgpt: usize, chars: usize) -> Corpus {
        let mut v: Vec<Snippet> = (0..humans).map(|i| sized(&format!("h{i:03}"), Origin::Human, chars + i)).collect();
        v.extend((0..chatgpt).map(|i| sized(&format!("g{i:03}"), Origin::Chatgpt, chars + i)));
        v.push(sized("short-h", Origin::Human, 1000));
        v.push(sized("short-g", Origin::Chatgpt, 10));
        Corpus::new(v, Provenance::UnpairedU).unwrap()
    }

    #[test]
    fn selection_respects_bounds_and_counts() {
        let corpus = unpaired(60, 70, 1001);
        let constraint = BaselineId::OpenaiClassifier.default_constraint();
        let picked = select_comparison_set(&corpus, &constraint, 50, 7).unwrap();
        assert_eq!(picked.len(), 100);
        assert!(picked.iter().all(|s| s.char_count() > 1000));
        assert_eq!(picked.iter().filter(|s| s.origin() == Origin::Human).count(), 50);
        assert!(picked.windows(2).all(|w| w[0].id() < w[1].id()));

        let mut reversed = corpus.snippets().to_vec();
        reversed.reverse();
        let reversed = Corpus::new(reversed, Provenance::UnpairedU).unwrap();
        assert_eq!(select_comparison_set(&reversed, &constraint, 50, 7).unwrap(), picked);
        assert_ne!(select_comparison_set(&corpus, &constraint, 50, 8).unwrap(), picked);
    }

    #[test]
    fn upper_bound_is_inclusive() {
        let c = LengthConstraint::new(250, Some(5000)).unwrap();
        assert!(c.admits(&sized("a", Origin::Human, 5000)));
        assert!(!c.admits(&sized("a", Origin::Human, 5001)));
        assert!(!c.admits(&sized("a", Origin::Human, 250)));
        assert!(c.admits(&sized("a", Origin::Human, 251)));
        assert!(LengthConstraint::new(10, Some(10)).is_err());
    }

    #[test]
    fn too_few_eligible() {
        let corpus = unpaired(40, 60, 1001);
        match select_comparison_set(&corpus, &LengthConstraint::new(1000, None).unwrap(), 50, 1) {
            Err(BaselineError::InsufficientEligible { needed: 50, human: 40, chatgpt: 60 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replay_and_fixture_round_trip() {
        let rows = vec![
            FixtureRow { snippet_id: "a".into(), answer_text: "Your text may include parts written by AI".into() },
            FixtureRow { snippet_id: "b".into(), answer_text: "has, comma and \"quote\"".into() },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.csv");
        write_fixture(&path, &rows).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("\"snippet_id\",\"answer_text\"\n"));
        assert_eq!(read_fixture(&path).unwrap(), rows);
        let client = ReplayClient::from_file(&path).unwrap();
        let a = Snippet::new("a", Origin::Chatgpt, None, "x");
        assert_eq!(query_baseline(&client, &a).unwrap(), rows[0].answer_text);
        let z = Snippet::new("z", Origin::Chatgpt, None, "x");
        assert!(matches!(query_baseline(&client, &z), Err(BaselineError::ReplayMiss(id)) if id == "z"));
    }

    #[test]
    fn scoring_counts_correct_rows() {
        let human = "Your text is likely to be written entirely by a human";
        let ai = "Your text is likely to be written entirely by AI";
        let snippets: Vec<Snippet> = (0..4).map(|i| Snippet::new(format!("s{i}"), if i < 2 { Origin::Human } else { Origin::Chatgpt }, None, "x")).collect();
        let client = ReplayClient::from_rows(
            [human, ai, ai, human].iter().enumerate().map(|(i, a)| FixtureRow { snippet_id: format!("s{i}"), answer_text: a.to_string() }),
        );
        let score = score_answers(BaselineId::Gptzero, &snippets, &client, "p").unwrap();
        assert_eq!((score.correct, score.total), (2, 4));
        assert_eq!(score.report.accuracy, 0.5);
        assert_eq!(score.verdicts[0].2, 2);
        assert_eq!(score.verdicts[2].2, 2);
    }
}
