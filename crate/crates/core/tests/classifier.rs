mod common;

use codeprov_core::classifier::{
    persist, predict, predict_batch, read_meta, restore, train, Backend, BackendKind, ClassifierError, Hyperparams, LinearBackend,
    ModelHandle, META_FILE,
};
use codeprov_core::extractor::PreprocessConfig;
use codeprov_core::split::split;
use codeprov_core::{Corpus, DatasetSplit, Origin, Part, Provenance, Snippet, SplitOptions};

fn hp() -> Hyperparams {
    Hyperparams::defaults_for(BackendKind::Linear)
}

fn c1() -> PreprocessConfig {
    PreprocessConfig::preset("C1").unwrap()
}

fn fit(corpus: &Corpus, split: &DatasetSplit) -> ModelHandle {
    train(&LinearBackend, split, corpus, &c1(), None, &hp()).unwrap()
}

fn default_split(corpus: &Corpus) -> DatasetSplit {
    split(corpus, &SplitOptions::for_corpus(corpus)).unwrap()
}

fn labels(model: &ModelHandle, snippets: &[&Snippet]) -> Vec<Origin> {
    predict_batch(model, snippets, &c1(), None).unwrap().into_iter().map(|p| p.label).collect()
}

#[test]
fn separable_toy_corpus_is_learned() {
    let corpus = common::separable(40, 1);
    let all: Vec<String> = corpus.snippets().iter().map(|s| s.id().to_string()).collect();
    let s = DatasetSplit { train: all, validation: vec![], test: vec![], ..default_split(&corpus) };
    let model = fit(&corpus, &s);
    let log = &model.meta().training;
    assert_eq!(log.selected_epoch, log.history.len());
    assert_eq!(log.history.last().unwrap().train_accuracy, 1.0);
    let train_part = s.select(&corpus, Part::Train);
    let truth: Vec<Origin> = train_part.iter().map(|s| s.origin()).collect();
    assert_eq!(labels(&model, &train_part), truth);
    for snippet in train_part.iter().take(5) {
        assert_eq!(predict(&model, snippet, &c1(), None).unwrap().label, snippet.origin());
    }
}

#[test]
fn validation_picks_the_earliest_best_epoch() {
    let corpus = common::separable(40, 1);
    let model = fit(&corpus, &default_split(&corpus));
    let log = &model.meta().training;
    let best = log.history.iter().filter_map(|h| h.validation_accuracy).fold(0.0, f64::max);
    let first = log.history.iter().position(|h| h.validation_accuracy == Some(best)).unwrap();
    assert_eq!(log.selected_epoch, first + 1);
}

#[test]
fn training_preconditions() {
    let corpus = common::separable(5, 2);
    let empty = DatasetSplit { train: vec![], ..default_split(&corpus) };
    assert!(matches!(train(&LinearBackend, &empty, &corpus, &c1(), None, &hp()), Err(ClassifierError::EmptyTrainingSet)));

    let humans: Vec<String> = corpus.snippets().iter().filter(|s| s.origin() == Origin::Human).map(|s| s.id().to_string()).collect();
    let single = DatasetSplit { train: humans, ..default_split(&corpus) };
    assert!(matches!(train(&LinearBackend, &single, &corpus, &c1(), None, &hp()), Err(ClassifierError::SingleClass(Origin::Human))));

    let bad = Hyperparams { batch_size: 0, ..hp() };
    assert!(matches!(train(&LinearBackend, &default_split(&corpus), &corpus, &c1(), None, &bad), Err(ClassifierError::InvalidHyperparams(_))));
}

#[test]
fn same_seed_same_weights() {
    let corpus = common::marked_pairs(30, 3);
    let s = default_split(&corpus);
    let train_part = s.select(&corpus, Part::Train);
    let validation = s.select(&corpus, Part::Validation);
    let (a, _) = LinearBackend.fit(&train_part, &validation, &hp()).unwrap();
    let (b, _) = LinearBackend.fit(&train_part, &validation, &hp()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, model) in [("a", &a), ("b", &b)] {
        std::fs::create_dir(dir.path().join(name)).unwrap();
        model.save(&dir.path().join(name)).unwrap();
    }
    let read = |p: &str| std::fs::read(dir.path().join(p).join("weights.bin")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn scores_are_argmax_probabilities() {
    let corpus = common::marked_pairs(30, 4);
    let model = fit(&corpus, &default_split(&corpus));
    let all: Vec<&Snippet> = corpus.snippets().iter().collect();
    let texts: Vec<&str> = all.iter().map(|s| s.text()).collect();
    for probs in model.classifier().probabilities(&texts).unwrap() {
        assert!((probs[0] + probs[1] - 1.0).abs() < 1e-6);
    }
    let batched = predict_batch(&model, &all, &c1(), None).unwrap();
    assert_eq!(batched.len(), all.len());
    for (p, s) in batched.iter().zip(&all) {
        assert_eq!(p.snippet_id, s.id());
        assert!((0.5..=1.0).contains(&p.score));
    }
    for (p, s) in batched.iter().zip(&all) {
        let single = predict(&model, s, &c1(), None).unwrap();
        assert_eq!(single.label, p.label);
        assert!((single.score - p.score).abs() < 1e-5);
    }
}

#[test]
fn persist_restore_round_trip() {
    let corpus = common::marked_pairs(40, 5);
    let mut model = fit(&corpus, &default_split(&corpus));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    persist(&mut model, &path).unwrap();
    assert_eq!(model.artifact_path(), Some(path.as_path()));
    let restored = restore(&path, &LinearBackend).unwrap();
    assert_eq!(restored.meta(), model.meta());
    let sample: Vec<&Snippet> = corpus.snippets().iter().take(50).collect();
    assert_eq!(predict_batch(&model, &sample, &c1(), None).unwrap(), predict_batch(&restored, &sample, &c1(), None).unwrap());

    let meta = read_meta(&path).unwrap();
    assert_eq!(meta.backend, BackendKind::Linear);
    assert_eq!(meta.preprocess_config, "C1");
    assert!(meta.tokenizer.starts_with("reference-surface/1"));
}

#[test]
fn restore_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(restore(&dir.path().join("absent"), &LinearBackend), Err(ClassifierError::MissingArtifact(_))));

    let corpus = common::separable(10, 6);
    let mut model = fit(&corpus, &default_split(&corpus));
    let path = dir.path().join("m");
    persist(&mut model, &path).unwrap();
    let meta_path = path.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).unwrap();
    std::fs::write(&meta_path, text.replace("codeprov-model/1", "codeprov-model/0")).unwrap();
    assert!(matches!(restore(&path, &LinearBackend), Err(ClassifierError::VersionMismatch { .. })));

    std::fs::write(&meta_path, text.replace("\"backend\": \"linear\"", "\"backend\": \"encoder\"")).unwrap();
    assert!(matches!(restore(&path, &LinearBackend), Err(ClassifierError::BackendMismatch { .. })));
}

#[test]
fn preprocessing_errors_carry_the_snippet_id() {
    let corpus = common::separable(10, 7);
    let model = fit(&corpus, &default_split(&corpus));
    let broken = Snippet::new("broken-1", Origin::Human, None, "class A { String s = \"unterminated; }");
    match predict(&model, &broken, &PreprocessConfig::preset("C4").unwrap(), None) {
        Err(ClassifierError::Preprocess(e)) => assert_eq!(e.snippet_id, "broken-1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn training_order_does_not_matter() {
    let corpus = common::marked_pairs(40, 8);
    let mut reversed = corpus.snippets().to_vec();
    reversed.reverse();
    let reversed = Corpus::new(reversed, Provenance::PairedP).unwrap();
    let (s1, s2) = (default_split(&corpus), default_split(&reversed));
    assert_eq!(s1, s2);
    let (m1, m2) = (fit(&corpus, &s1), fit(&reversed, &s2));
    let test = s1.select(&corpus, Part::Test);
    assert_eq!(predict_batch(&m1, &test, &c1(), None).unwrap(), predict_batch(&m2, &test, &c1(), None).unwrap());
}

#[test]
fn flipping_training_labels_flips_predictions() {
    let corpus = common::marked_pairs(40, 9);
    let flipped = Corpus::new(corpus.snippets().iter().map(|s| s.clone().with_origin(s.origin().other())).collect(), Provenance::PairedP).unwrap();
    let s = default_split(&corpus);
    let (m, mf) = (fit(&corpus, &s), fit(&flipped, &s));
    let test = s.select(&corpus, Part::Test);
    let a = labels(&m, &test);
    let b = labels(&mf, &test);
    assert_eq!(a.iter().map(|o| o.other()).collect::<Vec<_>>(), b);
}
