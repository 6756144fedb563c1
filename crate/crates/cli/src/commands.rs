use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use codeprov_core::baselines::{self, LengthConstraint, LiveClient, LiveConfig, ReplayClient};
use codeprov_core::classifier::{self, ModelHandle};
use codeprov_core::experiment::{rename_map_for, run_experiment_grid, GridDataset, ScoredPrediction};
use codeprov_core::extractor::{ClassRename, PreprocessConfig, RenameMap, RenameProvenance};
use codeprov_core::io::{write_atomic, write_json_atomic};
use codeprov_core::metrics::{evaluate_predictions, ReportTags};
use codeprov_core::report::{parse_reports, render_report, ReportFormat};
use codeprov_core::split::{parse_ratios, split as split_corpus, SplitOptions};
use codeprov_core::stats::{compare_classifiers, read_comparison_csv, ComparisonRow, PairedOutcome};
use codeprov_core::{Corpus, EvalReport, Origin, OriginCounts, Snippet};
use serde_json::json;

use crate::inputs::*;
use crate::*;

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn split_options(flags: &SplitFlags, corpus: &Corpus) -> Result<SplitOptions, Failure> {
    let ratios = parse_ratios(&flags.ratios).map_err(invalid)?;
    if ratios.contains(&0) || ratios.iter().sum::<u32>() != 100 {
        return Err(invalid(format!("ratios {} must be three positive integers summing to 100", flags.ratios)));
    }
    let defaults = SplitOptions::for_corpus(corpus);
    Ok(SplitOptions {
        ratios,
        seed: flags.seed,
        stratified: !flags.no_stratify,
        pair_aware: flags.pair_aware.unwrap_or(defaults.pair_aware),
    })
}

/// The rename map `config` needs, validated before any training starts.
fn rename_map(config: &PreprocessConfig, corpus: &Corpus, human: Option<&RenameMap>) -> Result<Option<RenameMap>, Failure> {
    rename_map_for(config, corpus, human).map_err(invalid)
}

pub fn ingest(a: IngestArgs) -> Outcome {
    check_output(&a.out, &[&a.manifest])?;
    let corpus = load_corpus(&a.manifest, a.provenance, a.root.as_deref())?;
    write_json_atomic(&a.out, &corpus).with_context(|| format!("writing {}", a.out.display()))?;
    let counts = corpus.counts();
    let mut summary = json!({
        "snippets": corpus.len(),
        "human": counts.get(Origin::Human),
        "chatgpt": counts.get(Origin::Chatgpt),
        "provenance": corpus.provenance(),
    });
    if a.expect_human.is_some() || a.expect_chatgpt.is_some() {
        let expected = OriginCounts::new(a.expect_human.unwrap_or(counts.get(Origin::Human)), a.expect_chatgpt.unwrap_or(counts.get(Origin::Chatgpt)));
        let check = codeprov_core::corpus::validate_counts(&corpus, expected);
        if !check.passed {
            eprintln!("warning: snippet counts differ from the expected ones");
        }
        summary["count_check"] = serde_json::to_value(check)?;
    }
    print_json(&summary);
    Ok(())
}

pub fn preprocess(a: PreprocessArgs) -> Outcome {
    check_output(&a.out, &[&a.corpus.corpus])?;
    let corpus = load_corpus(&a.corpus.corpus, a.corpus.provenance, None)?;
    let config = parse_configs(std::slice::from_ref(&a.config), &a.rules.project_prefixes)?.remove(0);
    let human = load_human_names(a.rules.rename_map.as_deref())?;
    let map = rename_map(&config, &corpus, human.as_ref())?;
    let out = corpus.try_map(|s| codeprov_core::extractor::apply_config(s, &config, map.as_ref()))?;
    write_json_atomic(&a.out, &out).with_context(|| format!("writing {}", a.out.display()))?;
    let chars = |c: &Corpus| c.snippets().iter().map(Snippet::char_count).sum::<usize>();
    print_json(&json!({ "config": config.name, "snippets": out.len(), "chars_before": chars(&corpus), "chars_after": chars(&out) }));
    Ok(())
}

pub fn split(a: SplitArgs) -> Outcome {
    check_output(&a.out, &[&a.corpus.corpus])?;
    let corpus = load_corpus(&a.corpus.corpus, a.corpus.provenance, None)?;
    let options = split_options(&a.split, &corpus)?;
    let parts = split_corpus(&corpus, &options)?;
    write_json_atomic(&a.out, &parts).with_context(|| format!("writing {}", a.out.display()))?;
    let [train, validation, test] = parts.sizes();
    print_json(&json!({ "train": train, "validation": validation, "test": test, "seed": options.seed }));
    Ok(())
}

pub fn train(a: TrainArgs) -> Outcome {
    let corpus = load_corpus(&a.corpus.corpus, a.corpus.provenance, None)?;
    let config = parse_configs(std::slice::from_ref(&a.config), &a.rules.project_prefixes)?.remove(0);
    let human = load_human_names(a.rules.rename_map.as_deref())?;
    let map = rename_map(&config, &corpus, human.as_ref())?;
    let parts = match &a.split_file {
        Some(path) => load_split(path, &corpus)?,
        None => split_corpus(&corpus, &split_options(&a.split, &corpus)?)?,
    };
    let hp = a.backend.hyperparams(a.split.seed);
    hp.validate().map_err(invalid)?;
    let backend = training_backend(a.backend.backend, a.backend.checkpoint.as_ref())?;

    let mut model = classifier::train(backend.as_ref(), &parts, &corpus, &config, map.as_ref(), &hp)?;
    classifier::persist(&mut model, &a.out)?;
    let split_path = a.out.join("split.json");
    write_json_atomic(&split_path, &parts).with_context(|| format!("writing {}", split_path.display()))?;
    let log = &model.meta().training;
    print_json(&json!({
        "model": a.out,
        "backend": model.backend(),
        "config": config.name,
        "train_size": log.train_size,
        "validation_size": log.validation_size,
        "selected_epoch": log.selected_epoch,
        "history": log.history,
    }));
    Ok(())
}

pub fn predict(a: PredictArgs) -> Outcome {
    let model = restore_model(&a.model)?;
    let config = &model.meta().preprocess;
    let mut snippets = Vec::new();
    for path in &a.input {
        require_file(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        // The truth is unknown; the label only decides whether the class is renamed.
        snippets.push(Snippet::new(stem(path), Origin::Human, Some(stem(path)), text));
    }
    let map = match (config.class_rename, &a.class_name) {
        (ClassRename::Keep, _) => None,
        (_, None) => return Err(invalid(format!("configuration {} renames classes: pass --class-name", config.name))),
        (kind, Some(name)) => {
            let provenance = if kind == ClassRename::CounterpartName { RenameProvenance::Counterpart } else { RenameProvenance::Human };
            let mut map = RenameMap::new(provenance);
            for s in &snippets {
                map.insert(s.id(), name.as_str()).map_err(invalid)?;
            }
            Some(map)
        }
    };
    let refs: Vec<&Snippet> = snippets.iter().collect();
    for prediction in classifier::predict_batch(&model, &refs, config, map.as_ref())? {
        println!("{}", serde_json::to_string(&prediction)?);
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Outcome {
    let outputs: Vec<&Path> = a.out.iter().chain(&a.predictions).map(PathBuf::as_path).collect();
    for out in &outputs {
        check_output(out, &[&a.corpus.corpus])?;
    }
    let model = restore_model(&a.model)?;
    let corpus = load_corpus(&a.corpus.corpus, a.corpus.provenance, None)?;
    let human = load_human_names(a.rules.rename_map.as_deref())?;
    let config = model.meta().preprocess.clone();
    let map = rename_map(&config, &corpus, human.as_ref())?;
    let snippets: Vec<&Snippet> = match &a.split_file {
        Some(path) => load_split(path, &corpus)?.select(&corpus, a.part),
        None => corpus.snippets().iter().collect(),
    };
    if snippets.is_empty() {
        return Err(invalid("nothing to evaluate"));
    }
    let (report, scored) = score(&model, &snippets, &config, map.as_ref(), &crate::inputs::stem(&a.corpus.corpus))?;
    if let Some(out) = &a.out {
        write_json_atomic(out, &report).with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(out) = &a.predictions {
        write_json_atomic(out, &scored).with_context(|| format!("writing {}", out.display()))?;
    }
    print_json(&serde_json::to_value(&report)?);
    Ok(())
}

fn score(
    model: &ModelHandle,
    snippets: &[&Snippet],
    config: &PreprocessConfig,
    map: Option<&RenameMap>,
    dataset: &str,
) -> anyhow::Result<(EvalReport, Vec<ScoredPrediction>)> {
    let predictions = classifier::predict_batch(model, snippets, config, map)?;
    let truth: Vec<Origin> = snippets.iter().map(|s| s.origin()).collect();
    let meta = model.meta();
    let tags = ReportTags { dataset: dataset.to_string(), config: config.name.clone(), backend: meta.backend.to_string(), seed: meta.hyperparams.seed };
    let report = evaluate_predictions(&truth, &predictions, tags)?;
    let scored = predictions.into_iter().zip(truth).map(|(prediction, truth)| ScoredPrediction { prediction, truth }).collect();
    Ok((report, scored))
}

pub fn grid(a: GridArgs) -> Outcome {
    let configs = parse_configs(&a.configs, &a.rules.project_prefixes)?;
    let human = load_human_names(a.rules.rename_map.as_deref())?;
    if human.is_none() {
        if let Some(c) = configs.iter().find(|c| c.class_rename == ClassRename::HumanChosenName) {
            return Err(invalid(format!("configuration {} needs --rename-map", c.name)));
        }
    }
    if a.jobs == 0 {
        return Err(invalid("--jobs must be at least 1"));
    }
    let hp = a.backend.hyperparams(a.split.seed);
    hp.validate().map_err(invalid)?;
    let backend = training_backend(a.backend.backend, a.backend.checkpoint.as_ref())?;

    let mut datasets = Vec::new();
    for arg in &a.corpora {
        let (name, path) = labelled(arg);
        if datasets.iter().any(|d: &GridDataset| d.name == name) {
            return Err(invalid(format!("dataset name {name} given twice")));
        }
        let corpus = load_corpus(&path, a.provenance, None)?;
        let options = split_options(&a.split, &corpus)?;
        let mut dataset = GridDataset::new(name, corpus);
        dataset.split = Some(options);
        dataset.human_names = human.clone();
        datasets.push(dataset);
    }

    let results = run_experiment_grid(&datasets, &configs, backend.as_ref(), &hp, a.jobs);
    let mut failed = 0;
    for cell in &results {
        let file = format!("{}_{}.json", cell.dataset, cell.config);
        match &cell.outcome {
            Ok(output) => {
                let report_path = a.out.join(&file);
                write_json_atomic(&report_path, &output.report).with_context(|| format!("writing {}", report_path.display()))?;
                let predictions_path = a.out.join("predictions").join(&file);
                write_json_atomic(&predictions_path, &output.predictions)
                    .with_context(|| format!("writing {}", predictions_path.display()))?;
                println!("{} {}: accuracy {:.4}", cell.dataset, cell.config, output.report.accuracy);
            }
            Err(e) => {
                failed += 1;
                eprintln!("{} {}: failed: {e}", cell.dataset, cell.config);
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("{failed} of {} cells failed", results.len())));
    }
    Ok(())
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, ScoredPrediction>, Failure> {
    let rows: Vec<ScoredPrediction> = read_json(path, "predictions file")?;
    Ok(rows.into_iter().map(|p| (p.prediction.snippet_id.clone(), p)).collect())
}

fn joined_rows(label: &str, a: &Path, b: &Path) -> Result<Vec<ComparisonRow>, Failure> {
    let (left, right) = (read_predictions(a)?, read_predictions(b)?);
    if !left.keys().eq(right.keys()) {
        return Err(invalid(format!("{label}: {} and {} cover different snippets", a.display(), b.display())));
    }
    left.into_iter()
        .map(|(id, p)| {
            let q = &right[&id];
            if p.truth != q.truth {
                return Err(invalid(format!("{label}: snippet {id} has different truths")));
            }
            Ok(ComparisonRow { snippet_id: id, truth: p.truth, pred_a: p.prediction.label, pred_b: q.prediction.label })
        })
        .collect()
}

pub fn compare(a: CompareArgs) -> Outcome {
    let mut outcomes = Vec::new();
    for arg in &a.csv {
        let (label, path) = labelled(arg);
        require_file(&path)?;
        let rows = read_comparison_csv(&path).map_err(invalid)?;
        outcomes.push((label, PairedOutcome::from_predictions(&rows)));
    }
    for arg in &a.pair {
        let (label, paths) = arg.split_once('=').ok_or_else(|| invalid(format!("--pair {arg:?}: expected label=a.json,b.json")))?;
        let (left, right) = paths.split_once(',').ok_or_else(|| invalid(format!("--pair {arg:?}: expected two files")))?;
        let rows = joined_rows(label, Path::new(left), Path::new(right))?;
        outcomes.push((label.to_string(), PairedOutcome::from_predictions(&rows)));
    }
    if outcomes.is_empty() {
        return Err(invalid("nothing to compare: pass --csv or --pair"));
    }
    let results = compare_classifiers(&outcomes)?;
    if let Some(out) = &a.out {
        write_json_atomic(out, &results).with_context(|| format!("writing {}", out.display()))?;
    }
    print_json(&serde_json::to_value(&results)?);
    Ok(())
}

fn report_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| invalid(format!("{}: {e}", input.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            require_file(input)?;
            files.push(input.clone());
        }
    }
    Ok(files)
}

pub fn report(a: ReportArgs) -> Outcome {
    let format: ReportFormat = a.format.parse().map_err(invalid)?;
    let files = report_files(&a.input)?;
    if let Some(out) = &a.out {
        let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
        check_output(out, &inputs)?;
    }
    let mut reports = Vec::new();
    for file in &files {
        let text = std::fs::read_to_string(file).map_err(|e| invalid(format!("{}: {e}", file.display())))?;
        match serde_json::from_str::<EvalReport>(&text) {
            Ok(one) => reports.push(one),
            Err(_) => reports.extend(parse_reports(&text).map_err(|e| invalid(format!("{}: {e}", file.display())))?),
        }
    }
    let rendered = render_report(&reports, format);
    match &a.out {
        Some(out) => write_atomic(out, rendered.as_bytes()).with_context(|| format!("writing {}", out.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

pub fn baseline_select(a: SelectArgs) -> Outcome {
    check_output(&a.out, &[&a.corpus.corpus])?;
    let corpus = load_corpus(&a.corpus.corpus, a.corpus.provenance, None)?;
    let defaults = a.baseline.default_constraint();
    let max_chars = a.max_chars.or(if a.min_chars.is_some() { None } else { defaults.max_chars });
    let constraint = LengthConstraint::new(a.min_chars.unwrap_or(defaults.min_chars), max_chars).map_err(invalid)?;
    let selected = baselines::select_comparison_set(&corpus, &constraint, a.per_class, a.seed).map_err(invalid)?;
    let selection = Corpus::new(selected, corpus.provenance())?;
    write_json_atomic(&a.out, &selection).with_context(|| format!("writing {}", a.out.display()))?;
    print_json(&json!({ "baseline": a.baseline, "constraint": constraint, "selected": selection.len() }));
    Ok(())
}

pub fn baseline_query(a: QueryArgs) -> Outcome {
    let selection = load_corpus(&a.selection, None, None)?;
    let config = LiveConfig {
        token_env: a.token_env,
        min_interval_ms: a.min_interval_ms,
        text_field: a.text_field,
        answer_pointer: a.answer_pointer,
        ..LiveConfig::new(a.endpoint)
    };
    let client = LiveClient::new(config, &a.fixture).map_err(invalid)?;
    for snippet in selection.snippets() {
        baselines::query_baseline(&client, snippet)?;
    }
    print_json(&json!({ "queried": selection.len(), "fixture": a.fixture }));
    Ok(())
}

pub fn baseline_score(a: ScoreArgs) -> Outcome {
    if let Some(out) = &a.out {
        check_output(out, &[&a.selection, &a.fixture])?;
    }
    let selection = load_corpus(&a.selection, None, None)?;
    require_file(&a.fixture)?;
    let client = ReplayClient::from_file(&a.fixture).map_err(invalid)?;
    let score = baselines::score_answers(a.baseline, selection.snippets(), &client, &stem(&a.selection))?;
    if let Some(out) = &a.out {
        write_json_atomic(out, &score).with_context(|| format!("writing {}", out.display()))?;
    }
    print_json(&json!({
        "baseline": score.baseline,
        "correct": score.correct,
        "total": score.total,
        "accuracy": score.report.accuracy,
        "verdicts": score.verdicts,
    }));
    Ok(())
}
