//! Dataset x configuration grid: one train/evaluate cell per pair.

use serde::{Deserialize, Serialize};

use crate::classifier::{predict_batch, train, Backend, Hyperparams, Prediction};
use crate::corpus::Corpus;
use crate::extractor::{ClassRename, PreprocessConfig, RenameMap, RenameProvenance};
use crate::metrics::{evaluate_predictions, EvalReport, ReportTags};
use crate::snippet::Origin;
use crate::split::{split, DatasetSplit, Part, SplitOptions};

/// One dataset of the grid. A corpus that failed to load is kept as an
/// error so that its cells are reported rather than silently skipped.
pub struct GridDataset {
    pub name: String,
    pub corpus: Result<Corpus, String>,
    /// Defaults to [`SplitOptions::for_corpus`] with the hyperparameter seed.
    pub split: Option<SplitOptions>,
    /// Needed by configurations that rename to a human-chosen name.
    pub human_names: Option<RenameMap>,
}

impl GridDataset {
    pub fn new(name: impl Into<String>, corpus: Corpus) -> Self {
        GridDataset { name: name.into(), corpus: Ok(corpus), split: None, human_names: None }
    }

    pub fn failed(name: impl Into<String>, error: impl Into<String>) -> Self {
        GridDataset { name: name.into(), corpus: Err(error.into()), split: None, human_names: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    #[serde(flatten)]
    pub prediction: Prediction,
    pub truth: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutput {
    pub report: EvalReport,
    pub predictions: Vec<ScoredPrediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub config: String,
    pub outcome: Result<CellOutput, String>,
}

/// The rename map a configuration needs on `corpus`, if any.
pub fn rename_map_for(config: &PreprocessConfig, corpus: &Corpus, human_names: Option<&RenameMap>) -> Result<Option<RenameMap>, String> {
    match config.class_rename {
        ClassRename::Keep => Ok(None),
        ClassRename::CounterpartName => RenameMap::from_counterparts(corpus.snippets()).map(Some).map_err(|e| e.to_string()),
        ClassRename::HumanChosenName => match human_names {
            Some(map) if map.provenance() == RenameProvenance::Human => Ok(Some(map.clone())),
            Some(_) => Err(format!("configuration {} needs a human-chosen rename map", config.name)),
            None => Err(format!("configuration {} needs a human-chosen rename map and none was given", config.name)),
        },
    }
}

/// Trains on the train part and scores the test part of one split.
pub fn run_cell(
    backend: &dyn Backend,
    corpus: &Corpus,
    split: &DatasetSplit,
    config: &PreprocessConfig,
    rename_map: Option<&RenameMap>,
    hp: &Hyperparams,
    dataset: &str,
) -> Result<CellOutput, String> {
    let model = train(backend, split, corpus, config, rename_map, hp).map_err(|e| e.to_string())?;
    let test = split.select(corpus, Part::Test);
    let predictions = predict_batch(&model, &test, config, rename_map).map_err(|e| e.to_string())?;
    let truth: Vec<Origin> = test.iter().map(|s| s.origin()).collect();
    let tags = ReportTags { dataset: dataset.to_string(), config: config.name.clone(), backend: backend.kind().to_string(), seed: hp.seed };
    let report = evaluate_predictions(&truth, &predictions, tags).map_err(|e| e.to_string())?;
    let predictions = predictions.into_iter().zip(truth).map(|(prediction, truth)| ScoredPrediction { prediction, truth }).collect();
    Ok(CellOutput { report, predictions })
}

/// Runs every (dataset, configuration) cell with up to `jobs` in parallel.
/// Results come back in declaration order, datasets outermost.
pub fn run_experiment_grid(datasets: &[GridDataset], configs: &[PreprocessConfig], backend: &dyn Backend, hp: &Hyperparams, jobs: usize) -> Vec<CellResult> {
    let splits: Vec<Result<DatasetSplit, String>> = datasets
        .iter()
        .map(|d| {
            let corpus = d.corpus.as_ref().map_err(|e| format!("dataset {} unavailable: {e}", d.name))?;
            let options = d.split.unwrap_or_else(|| SplitOptions { seed: hp.seed, ..SplitOptions::for_corpus(corpus) });
            split(corpus, &options).map_err(|e| format!("dataset {}: {e}", d.name))
        })
        .collect();
    let cells: Vec<(usize, &PreprocessConfig)> = (0..datasets.len()).flat_map(|d| configs.iter().map(move |c| (d, c))).collect();
    let run = |&(d, config): &(usize, &PreprocessConfig)| {
        let dataset = &datasets[d];
        let outcome = match (&dataset.corpus, &splits[d]) {
            (Ok(corpus), Ok(split)) => rename_map_for(config, corpus, dataset.human_names.as_ref())
                .and_then(|map| run_cell(backend, corpus, split, config, map.as_ref(), hp, &dataset.name)),
            (_, Err(e)) => Err(e.clone()),
            (Err(e), _) => Err(e.clone()),
        };
        CellResult { dataset: dataset.name.clone(), config: config.name.clone(), outcome }
    };
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(run).collect()),
        Err(_) => cells.iter().map(run).collect(),
    }
}
