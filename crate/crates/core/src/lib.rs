//! Detecting machine-generated source code: preprocessing, datasets,
//! tokenization, classification, evaluation and paired statistics.

pub mod baselines;
pub mod classifier;
pub mod corpus;
pub mod experiment;
pub mod extractor;
pub mod io;
pub mod metrics;
pub mod report;
pub mod snippet;
pub mod split;
pub mod stats;
pub mod tokenizer;

pub use classifier::{BackendKind, Hyperparams, ModelHandle, Prediction};
pub use corpus::{Corpus, OriginCounts, Provenance};
pub use metrics::EvalReport;
pub use snippet::{Origin, Snippet};
pub use split::{DatasetSplit, Part, SplitOptions};
