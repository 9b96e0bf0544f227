//! End-to-end run driven by a [`PipelineConfig`].

use std::path::Path;

use crate::align::AlignmentLinks;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{EvalSentence, Evaluation, LabelMap};
use crate::io::{read_text, to_jsonl, to_pretty_json, Manifest};
use crate::projection::ProjectionReport;
use crate::stages::{
    alignment_text, build_splits, emit, evaluate_sentences, ingest_dir, parallel_text,
    parse_alignment_text, project_all, read_lines, sentencize, synthesize, tag_all, train_aligner,
    train_on, write_pipeline_split, SplitStats,
};
use crate::tokenizer::{TokenizedSentence, Tokenizer};

/// Summary of a pipeline run. Every file it names lives in the output
/// directory and is listed with its digest in `manifest.json`.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub documents: usize,
    pub sentences: usize,
    pub projection: ProjectionReport,
    pub split: SplitStats,
    pub best_epoch: Option<usize>,
    pub evaluation: Option<Evaluation>,
    pub external_evaluation: Option<Evaluation>,
    pub manifest: Manifest,
}

/// Runs ingest, sentence splitting, synthesis, alignment, projection,
/// filtering and splitting, then (per the stage toggles) tagger training
/// and evaluation on the test part and on optional external gold data.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.check_inputs()?;
    let p = &config.paths;
    let out = &p.output_dir;
    let tokenizer = Tokenizer::default();
    let mut m = Manifest::new("pipeline");
    for (k, v) in &config.normalized {
        m.setting(k.clone(), v);
    }
    m.seed("synthesis", config.seeds.synthesis);
    m.seed("split", config.seeds.split);
    m.seed("training", config.seeds.training);

    let docs = ingest_dir(&p.corpus_dir)?;
    for d in &docs {
        for ext in ["txt", "ann"] {
            let name = format!("{}.{ext}", d.doc_id);
            m.input(format!("corpus/{name}"), &p.corpus_dir.join(&name))?;
        }
    }
    log::info!("ingested {} documents", docs.len());
    emit(&mut m, out, "documents.jsonl", to_jsonl(&docs)?.as_bytes())?;

    let mut sentences = sentencize(&docs, &config.segmenter)?;
    log::info!("segmented {} sentences", sentences.len());
    emit(
        &mut m,
        out,
        "sentences.jsonl",
        to_jsonl(&sentences)?.as_bytes(),
    )?;
    if config.stages.synthesize {
        sentences = synthesize(
            sentences,
            config.seeds.synthesis,
            &config.placeholder_pattern,
        )?;
        emit(
            &mut m,
            out,
            "synthesized.jsonl",
            to_jsonl(&sentences)?.as_bytes(),
        )?;
    }

    m.input("target_file", &p.target_file)?;
    let targets = read_lines(&p.target_file)?;
    let parallel = parallel_text(&sentences, &targets)?;
    emit(&mut m, out, "parallel.txt", parallel.as_bytes())?;

    let links: Vec<AlignmentLinks> = match &p.alignment_file {
        Some(path) => {
            m.input("alignment_file", path)?;
            parse_alignment_text(&read_text(path)?)?
        }
        None => {
            let pairs: Vec<(Vec<String>, Vec<String>)> = sentences
                .iter()
                .zip(&targets)
                .map(|(s, t)| {
                    let tok = |x: &str| -> Vec<String> {
                        tokenizer
                            .tokenize(x)
                            .tokens
                            .into_iter()
                            .map(|t| t.surface)
                            .collect()
                    };
                    (tok(&s.text), tok(t))
                })
                .collect();
            let (model, log) = train_aligner(
                pairs.clone(),
                config.align.max_pair_len,
                config.align.ibm1_iterations,
                config.align.ibm2_iterations,
                config.align.distortion,
            )?;
            log::info!(
                "aligner trained, final log-likelihood {:?}",
                log.ibm2_log_likelihood.last()
            );
            emit(
                &mut m,
                out,
                "alignment_model.json",
                model.to_json()?.as_bytes(),
            )?;
            emit(
                &mut m,
                out,
                "alignment_log.json",
                to_pretty_json(&log)?.as_bytes(),
            )?;
            let links = model.align_all(&pairs);
            emit(
                &mut m,
                out,
                "alignment.pharaoh",
                alignment_text(&links).as_bytes(),
            )?;
            links
        }
    };

    let (projected, report) = project_all(&sentences, &targets, &links, &tokenizer)?;
    log::info!(
        "projected {} of {} annotations",
        report.total.projected,
        report.total.projected + report.total.dropped
    );
    emit(
        &mut m,
        out,
        "projected.jsonl",
        to_jsonl(&projected)?.as_bytes(),
    )?;
    emit(
        &mut m,
        out,
        "projection_report.json",
        to_pretty_json(&report)?.as_bytes(),
    )?;

    let (split, stats) = build_splits(
        projected,
        &config.dropped_labels,
        config.drop_empty,
        config.ratios,
        config.seeds.split,
    )?;
    write_pipeline_split(&mut m, out, &split, &stats)?;

    let mut best_epoch = None;
    let mut evaluation = None;
    let mut external_evaluation = None;
    if config.stages.train {
        let outcome = train_on(&split.train, &split.validation, config.tagger.clone())?;
        best_epoch = Some(outcome.best_epoch);
        let model = outcome.model;
        emit(&mut m, out, "tagger.json", model.to_json()?.as_bytes())?;
        emit(
            &mut m,
            out,
            "training_history.json",
            to_pretty_json(&outcome.history)?.as_bytes(),
        )?;

        if config.stages.evaluate {
            let inputs: Vec<TokenizedSentence> = split.test.iter().map(|s| s.tokenized()).collect();
            let pred = tag_all(&model, inputs)?;
            emit(
                &mut m,
                out,
                "predictions.jsonl",
                to_jsonl(&pred)?.as_bytes(),
            )?;
            let gold: Vec<EvalSentence> = split.test.iter().map(EvalSentence::from).collect();
            let pred: Vec<EvalSentence> = pred.iter().map(EvalSentence::from).collect();
            let e = evaluate_sentences(gold, &pred, None, config.eval_level)?;
            emit(
                &mut m,
                out,
                "evaluation.json",
                to_pretty_json(&e)?.as_bytes(),
            )?;
            emit(&mut m, out, "evaluation.txt", e.to_table().as_bytes())?;
            evaluation = Some(e);

            if let Some(gold_path) = &p.external_gold {
                m.input("external_gold", gold_path)?;
                let e = evaluate_external(config, &model, gold_path, &mut m)?;
                emit(
                    &mut m,
                    out,
                    "evaluation_external.json",
                    to_pretty_json(&e)?.as_bytes(),
                )?;
                emit(
                    &mut m,
                    out,
                    "evaluation_external.txt",
                    e.to_table().as_bytes(),
                )?;
                external_evaluation = Some(e);
            }
        }
    }

    m.save(&out.join("manifest.json"))?;
    Ok(PipelineSummary {
        documents: docs.len(),
        sentences: sentences.len(),
        projection: report,
        split: stats,
        best_epoch,
        evaluation,
        external_evaluation,
        manifest: m,
    })
}

fn evaluate_external(
    config: &PipelineConfig,
    model: &crate::tagger::TaggerModel,
    gold_path: &Path,
    m: &mut Manifest,
) -> Result<Evaluation> {
    let tokenizer = Tokenizer::default();
    let gold: Vec<EvalSentence> = read_text(gold_path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| EvalSentence::parse_record(l, &tokenizer))
        .collect::<Result<_>>()?;
    let map = match &config.paths.label_map {
        Some(path) => {
            m.input("label_map", path)?;
            Some(LabelMap::parse(&read_text(path)?)?)
        }
        None => None,
    };
    let inputs = gold
        .iter()
        .map(|g| TokenizedSentence {
            text: g.text.clone(),
            tokens: g.tokens.clone(),
        })
        .collect();
    let pred: Vec<EvalSentence> = tag_all(model, inputs)?
        .iter()
        .map(EvalSentence::from)
        .collect();
    if pred.len() != gold.len() {
        return Err(Error::Integrity(
            "tagging changed the sentence count".into(),
        ));
    }
    evaluate_sentences(gold, &pred, map.as_ref(), config.eval_level)
}
