//! Pipeline stages, each as an in-memory step plus a file-level runner that
//! reads its inputs, writes outputs atomically and leaves a manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{
    emit_pharaoh, parse_pharaoh, read_parallel_file, train_ibm1, train_ibm2, AlignmentLinks,
    AlignmentModel, DistortionMode, EmTrace, ParallelCorpus, PARALLEL_DELIMITER,
};
use crate::corpus::{
    parse_standoff, segment_sentences, SegmenterConfig, Sentence, SentenceRecord, StandoffDocument,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, map_labels, EvalSentence, Evaluation, LabelMap, Level};
use crate::io::{read_jsonl, read_text, sidecar_manifest, to_jsonl, to_pretty_json, Manifest};
use crate::projection::{
    filter_dataset, project_sentence, resolve_overlaps, split_dataset, AnnotatedSentence,
    DatasetSplit, PartStats, ProjectionReport, SplitRatios,
};
use crate::synthetic::{synthesize_placeholders, SyntheticValueSpec};
use crate::tagger::{
    decode_bilou, examples_from, inventory_of, train_tagger, Hyperparams, TaggerModel,
    TrainingOutcome,
};
use crate::tokenizer::{TokenizedSentence, Tokenizer};

/// Reads every `<doc>.txt` in `dir` with its `<doc>.ann`, ordered by name.
pub fn ingest_dir(dir: &Path) -> Result<Vec<StandoffDocument>> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(dir.to_path_buf()));
    }
    let mut texts: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    texts.sort();
    texts
        .iter()
        .map(|txt| {
            let doc_id = txt
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = read_text(txt)?;
            let ann = read_text(&txt.with_extension("ann"))?;
            parse_standoff(&doc_id, &text, &ann).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{doc_id}.ann: {message}"),
                },
                Error::Integrity(m) => Error::Integrity(format!("{doc_id}.ann: {m}")),
                Error::Range(m) => Error::Range(format!("{doc_id}.ann: {m}")),
                other => other,
            })
        })
        .collect()
}

/// Cuts documents into sentence records in document order.
pub fn sentencize(
    docs: &[StandoffDocument],
    config: &SegmenterConfig,
) -> Result<Vec<SentenceRecord>> {
    let mut out = Vec::new();
    for d in docs {
        out.extend(
            segment_sentences(d, config)?
                .iter()
                .map(SentenceRecord::from),
        );
    }
    Ok(out)
}

/// Replaces placeholders in every sentence with seeded synthetic values.
pub fn synthesize(
    records: Vec<SentenceRecord>,
    seed: u64,
    pattern: &str,
) -> Result<Vec<SentenceRecord>> {
    let base = SyntheticValueSpec::new(seed).with_pattern(pattern)?;
    records
        .into_iter()
        .map(|r| {
            let s = Sentence::try_from(r)?;
            let spec = base.for_sentence(&s.doc_id, s.doc_offset);
            Ok(SentenceRecord::from(&synthesize_placeholders(&s, &spec)?))
        })
        .collect()
}

/// One unlabeled record per input line.
pub fn tokenize_lines(text: &str, tokenizer: &Tokenizer) -> Vec<AnnotatedSentence> {
    text.lines()
        .map(|l| AnnotatedSentence::unlabeled(tokenizer.tokenize(l)))
        .collect()
}

/// Non-blank-terminated lines of a target file; a trailing newline does not
/// add an empty sentence.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

/// `source ||| target` lines for an aligner.
pub fn parallel_text(sources: &[SentenceRecord], targets: &[String]) -> Result<String> {
    if sources.len() != targets.len() {
        return Err(Error::Shape {
            sentence: sources.len().min(targets.len()),
            message: format!(
                "{} source sentences but {} target lines",
                sources.len(),
                targets.len()
            ),
        });
    }
    Ok(sources
        .iter()
        .zip(targets)
        .map(|(s, t)| format!("{}{PARALLEL_DELIMITER}{}\n", s.text, t))
        .collect())
}

/// Traces of a Model 1 + Model 2 training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignTrainingLog {
    pub ibm1_log_likelihood: Vec<f64>,
    pub ibm2_log_likelihood: Vec<f64>,
}

/// Trains Model 1 then Model 2 on tokenized pairs.
pub fn train_aligner(
    pairs: Vec<(Vec<String>, Vec<String>)>,
    max_pair_len: usize,
    ibm1_iterations: usize,
    ibm2_iterations: usize,
    mode: DistortionMode,
) -> Result<(AlignmentModel, AlignTrainingLog)> {
    let corpus = ParallelCorpus::new(pairs, max_pair_len)?;
    let (t1, trace1): (_, EmTrace) = train_ibm1(&corpus, ibm1_iterations)?;
    let (model, trace2) = train_ibm2(&corpus, ibm2_iterations, &t1, mode)?;
    Ok((
        model,
        AlignTrainingLog {
            ibm1_log_likelihood: trace1.log_likelihood,
            ibm2_log_likelihood: trace2.log_likelihood,
        },
    ))
}

/// Pharaoh text, one line per pair.
pub fn alignment_text(links: &[AlignmentLinks]) -> String {
    links.iter().map(|l| emit_pharaoh(l) + "\n").collect()
}

pub fn parse_alignment_text(text: &str) -> Result<Vec<AlignmentLinks>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            parse_pharaoh(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Projects every source sentence onto its tokenized target line.
pub fn project_all(
    sources: &[SentenceRecord],
    targets: &[String],
    links: &[AlignmentLinks],
    tokenizer: &Tokenizer,
) -> Result<(Vec<AnnotatedSentence>, ProjectionReport)> {
    if sources.len() != targets.len() || sources.len() != links.len() {
        return Err(Error::Shape {
            sentence: sources.len().min(targets.len()).min(links.len()),
            message: format!(
                "{} source sentences, {} target lines, {} alignment lines",
                sources.len(),
                targets.len(),
                links.len()
            ),
        });
    }
    let mut report = ProjectionReport::default();
    let mut out = Vec::with_capacity(sources.len());
    for (i, ((rec, tgt), l)) in sources.iter().zip(targets).zip(links).enumerate() {
        let src = Sentence::try_from(rec.clone())?;
        let src_tokens = tokenizer.tokenize(&src.text);
        let tgt_tokens = tokenizer.tokenize(tgt);
        let (sentence, r) =
            project_sentence(&src, &src_tokens, &tgt_tokens, l).map_err(|e| Error::Shape {
                sentence: i,
                message: e.to_string(),
            })?;
        report.merge(&r);
        out.push(sentence);
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub input_sentences: usize,
    pub kept_sentences: usize,
    pub seed: u64,
    pub dropped_labels: Vec<String>,
    pub train: PartStats,
    pub validation: PartStats,
    pub test: PartStats,
}

/// Drops labels (and optionally empty sentences), keeps the longest of
/// overlapping spans, then shuffles and splits.
pub fn build_splits(
    sentences: Vec<AnnotatedSentence>,
    dropped_labels: &BTreeSet<String>,
    drop_empty: bool,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(DatasetSplit<AnnotatedSentence>, SplitStats)> {
    let input_sentences = sentences.len();
    let kept: Vec<AnnotatedSentence> = filter_dataset(sentences, dropped_labels, drop_empty)
        .into_iter()
        .map(|mut s| {
            s.spans = resolve_overlaps(&s.spans);
            s
        })
        .collect();
    let kept_sentences = kept.len();
    let split = split_dataset(kept, ratios, seed)?;
    let stats = SplitStats {
        input_sentences,
        kept_sentences,
        seed,
        dropped_labels: dropped_labels.iter().cloned().collect(),
        train: PartStats::of(&split.train),
        validation: PartStats::of(&split.validation),
        test: PartStats::of(&split.test),
    };
    Ok((split, stats))
}

/// Trains a tagger on dataset records; the label inventory is every label
/// in the training and validation data.
pub fn train_on(
    train: &[AnnotatedSentence],
    validation: &[AnnotatedSentence],
    hyperparams: Hyperparams,
) -> Result<TrainingOutcome> {
    let all: Vec<AnnotatedSentence> = train.iter().chain(validation).cloned().collect();
    let inventory = inventory_of(&all);
    let tr = examples_from(train, &inventory)?;
    let va = examples_from(validation, &inventory)?;
    train_tagger(&tr, &va, inventory, hyperparams)
}

/// Greedy-decodes one tokenized sentence into labeled spans.
pub fn tag_tokenized(model: &TaggerModel, ts: TokenizedSentence) -> Result<AnnotatedSentence> {
    let actions = model.greedy_parse(&ts.surfaces());
    let spans = decode_bilou(&actions, &model.inventory)?;
    let mut out = AnnotatedSentence::unlabeled(ts);
    for s in spans {
        out.push_span(s.label, s.first, s.last)?;
    }
    Ok(out)
}

/// Tags sentences in parallel; output order follows input order.
pub fn tag_all(
    model: &TaggerModel,
    inputs: Vec<TokenizedSentence>,
) -> Result<Vec<AnnotatedSentence>> {
    inputs
        .into_par_iter()
        .map(|ts| tag_tokenized(model, ts))
        .collect()
}

/// Reads tagger input: JSON lines with `text` (and optionally `tokens`),
/// or plain text with one sentence per line.
pub fn read_tag_input(content: &str, tokenizer: &Tokenizer) -> Result<Vec<TokenizedSentence>> {
    let is_jsonl = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    if !is_jsonl {
        return Ok(content.lines().map(|l| tokenizer.tokenize(l)).collect());
    }
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let s = EvalSentence::parse_record(l, tokenizer).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            Ok(TokenizedSentence {
                text: s.text,
                tokens: s.tokens,
            })
        })
        .collect()
}

fn parse_eval_file(path: &Path, tokenizer: &Tokenizer) -> Result<Vec<EvalSentence>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            EvalSentence::parse_record(l, tokenizer).map_err(|e| match e {
                Error::Json { source, .. } => Error::Parse {
                    line: i + 1,
                    message: format!("{}: {source}", path.display()),
                },
                other => other,
            })
        })
        .collect()
}

/// Scores predictions against gold, relabeling gold through `map` and
/// restricting classes to its targets when one is given.
pub fn evaluate_sentences(
    gold: Vec<EvalSentence>,
    pred: &[EvalSentence],
    map: Option<&LabelMap>,
    level: Level,
) -> Result<Evaluation> {
    match map {
        Some(m) => {
            let gold = map_labels(gold, m)?;
            evaluate(&gold, pred, level, Some(&m.targets()))
        }
        None => evaluate(&gold, pred, level, None),
    }
}

// File-level runners used by the command-line front end.

fn write_with_manifest(mut m: Manifest, out: &Path, content: &[u8]) -> Result<()> {
    m.output("out", out, content)?;
    m.save(&sidecar_manifest(out))
}

pub fn run_ingest(corpus: &Path, out: &Path) -> Result<usize> {
    let docs = ingest_dir(corpus)?;
    let mut m = Manifest::new("ingest");
    for d in &docs {
        m.input(
            format!("{}.txt", d.doc_id),
            &corpus.join(format!("{}.txt", d.doc_id)),
        )?;
        m.input(
            format!("{}.ann", d.doc_id),
            &corpus.join(format!("{}.ann", d.doc_id)),
        )?;
    }
    write_with_manifest(m, out, to_jsonl(&docs)?.as_bytes())?;
    Ok(docs.len())
}

pub fn run_sentencize(input: &Path, out: &Path, config: &SegmenterConfig) -> Result<usize> {
    let docs: Vec<StandoffDocument> = read_jsonl(input)?;
    let recs = sentencize(&docs, config)?;
    let mut m = Manifest::new("sentencize");
    m.input("in", input)?;
    let abbrevs: Vec<&str> = config.abbreviations.iter().map(String::as_str).collect();
    m.setting("abbreviations", abbrevs.join(","));
    write_with_manifest(m, out, to_jsonl(&recs)?.as_bytes())?;
    Ok(recs.len())
}

pub fn run_synthesize(input: &Path, out: &Path, seed: u64, pattern: &str) -> Result<usize> {
    let recs: Vec<SentenceRecord> = read_jsonl(input)?;
    let recs = synthesize(recs, seed, pattern)?;
    let mut m = Manifest::new("synthesize");
    m.input("in", input)?;
    m.seed("synthesis", seed);
    m.setting("pattern", pattern);
    write_with_manifest(m, out, to_jsonl(&recs)?.as_bytes())?;
    Ok(recs.len())
}

pub fn run_tokenize(input: &Path, out: &Path) -> Result<usize> {
    let recs = tokenize_lines(&read_text(input)?, &Tokenizer::default());
    let mut m = Manifest::new("tokenize");
    m.input("in", input)?;
    write_with_manifest(m, out, to_jsonl(&recs)?.as_bytes())?;
    Ok(recs.len())
}

pub struct AlignTrainArgs<'a> {
    pub corpus: &'a Path,
    pub model: &'a Path,
    pub ibm1_iterations: usize,
    pub ibm2_iterations: usize,
    pub mode: DistortionMode,
    pub max_pair_len: usize,
}

pub fn run_align_train(a: &AlignTrainArgs) -> Result<AlignTrainingLog> {
    let pairs = read_parallel_file_checked(a.corpus)?;
    let (model, log) = train_aligner(
        pairs,
        a.max_pair_len,
        a.ibm1_iterations,
        a.ibm2_iterations,
        a.mode,
    )?;
    let mut m = Manifest::new("align-train");
    m.input("corpus", a.corpus)?;
    m.setting("ibm1_iterations", a.ibm1_iterations);
    m.setting("ibm2_iterations", a.ibm2_iterations);
    m.setting("distortion", format!("{:?}", a.mode));
    m.setting("max_pair_len", a.max_pair_len);
    m.output("model", a.model, model.to_json()?.as_bytes())?;
    m.output(
        "log",
        &a.model.with_extension("log.json"),
        to_pretty_json(&log)?.as_bytes(),
    )?;
    m.save(&sidecar_manifest(a.model))?;
    Ok(log)
}

fn read_parallel_file_checked(path: &Path) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    read_parallel_file(path, &Tokenizer::default())
}

pub fn run_align(model_path: &Path, corpus: &Path, out: &Path) -> Result<usize> {
    let model = AlignmentModel::from_json(&read_text(model_path)?)?;
    let pairs = read_parallel_file_checked(corpus)?;
    let links = model.align_all(&pairs);
    let mut m = Manifest::new("align");
    m.input("model", model_path)?;
    m.input("corpus", corpus)?;
    write_with_manifest(m, out, alignment_text(&links).as_bytes())?;
    Ok(links.len())
}

/// Writes projected (unfiltered, possibly overlapping) spans and a report.
pub fn run_project(
    src: &Path,
    tgt: &Path,
    align: &Path,
    out: &Path,
    report_out: Option<&Path>,
) -> Result<ProjectionReport> {
    let sources: Vec<SentenceRecord> = read_jsonl(src)?;
    let targets = read_lines(tgt)?;
    let links = parse_alignment_text(&read_text(align)?)?;
    let (sentences, report) = project_all(&sources, &targets, &links, &Tokenizer::default())?;
    let mut m = Manifest::new("project");
    m.input("src", src)?;
    m.input("tgt", tgt)?;
    m.input("align", align)?;
    m.output("out", out, to_jsonl(&sentences)?.as_bytes())?;
    let report_path = report_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("report.json"));
    m.output("report", &report_path, to_pretty_json(&report)?.as_bytes())?;
    m.save(&sidecar_manifest(out))?;
    Ok(report)
}

pub struct SplitArgs<'a> {
    pub input: &'a Path,
    pub out_dir: &'a Path,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub dropped_labels: &'a BTreeSet<String>,
    pub drop_empty: bool,
}

pub fn run_split(a: &SplitArgs) -> Result<SplitStats> {
    let sentences: Vec<AnnotatedSentence> = read_jsonl(a.input)?;
    let (split, stats) = build_splits(sentences, a.dropped_labels, a.drop_empty, a.ratios, a.seed)?;
    let mut m = Manifest::new("split");
    m.input("in", a.input)?;
    m.seed("split", a.seed);
    record_split_settings(&mut m, a.ratios, a.dropped_labels, a.drop_empty);
    write_split(&mut m, a.out_dir, &split, &stats)?;
    m.save(&a.out_dir.join("split.manifest.json"))?;
    Ok(stats)
}

fn record_split_settings(
    m: &mut Manifest,
    ratios: SplitRatios,
    dropped: &BTreeSet<String>,
    drop_empty: bool,
) {
    m.setting(
        "ratios",
        format!("{},{},{}", ratios.train, ratios.validation, ratios.test),
    );
    let d: Vec<&str> = dropped.iter().map(String::as_str).collect();
    m.setting("dropped_labels", d.join(","));
    m.setting("drop_empty", drop_empty);
}

fn write_split(
    m: &mut Manifest,
    dir: &Path,
    split: &DatasetSplit<AnnotatedSentence>,
    stats: &SplitStats,
) -> Result<()> {
    for (name, part) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        m.output(
            format!("{name}.jsonl"),
            &dir.join(format!("{name}.jsonl")),
            to_jsonl(part)?.as_bytes(),
        )?;
    }
    m.output(
        "split_stats.json",
        &dir.join("split_stats.json"),
        to_pretty_json(stats)?.as_bytes(),
    )
}

pub fn run_train(
    train: &Path,
    validation: &Path,
    out: &Path,
    hyperparams: Hyperparams,
) -> Result<TrainingOutcome> {
    let tr: Vec<AnnotatedSentence> = read_jsonl(train)?;
    let va: Vec<AnnotatedSentence> = read_jsonl(validation)?;
    let outcome = train_on(&tr, &va, hyperparams.clone())?;
    let mut m = Manifest::new("train");
    m.input("train", train)?;
    m.input("validation", validation)?;
    m.seed("training", hyperparams.seed);
    m.setting(
        "hyperparams",
        serde_json::to_string(&hyperparams).map_err(|e| Error::json("hyperparams", e))?,
    );
    m.setting("best_epoch", outcome.best_epoch);
    m.output("model", out, outcome.model.to_json()?.as_bytes())?;
    m.output(
        "history",
        &out.with_extension("history.json"),
        to_pretty_json(&outcome.history)?.as_bytes(),
    )?;
    m.save(&sidecar_manifest(out))?;
    Ok(outcome)
}

pub fn run_tag(model_path: &Path, input: &Path, out: &Path) -> Result<usize> {
    let model = TaggerModel::from_json(&read_text(model_path)?)?;
    let inputs = read_tag_input(&read_text(input)?, &Tokenizer::default())?;
    let tagged = tag_all(&model, inputs)?;
    let mut m = Manifest::new("tag");
    m.input("model", model_path)?;
    m.input("in", input)?;
    write_with_manifest(m, out, to_jsonl(&tagged)?.as_bytes())?;
    Ok(tagged.len())
}

pub struct EvaluateArgs<'a> {
    pub gold: &'a Path,
    pub pred: &'a Path,
    pub label_map: Option<&'a Path>,
    pub level: Level,
    pub out: &'a Path,
    pub table: Option<&'a Path>,
}

pub fn run_evaluate(a: &EvaluateArgs) -> Result<Evaluation> {
    let tk = Tokenizer::default();
    let gold = parse_eval_file(a.gold, &tk)?;
    let pred = parse_eval_file(a.pred, &tk)?;
    let map = a
        .label_map
        .map(|p| read_text(p).and_then(|c| LabelMap::parse(&c)))
        .transpose()?;
    let e = evaluate_sentences(gold, &pred, map.as_ref(), a.level)?;
    let mut m = Manifest::new("evaluate");
    m.input("gold", a.gold)?;
    m.input("pred", a.pred)?;
    if let Some(p) = a.label_map {
        m.input("label_map", p)?;
    }
    m.setting("level", format!("{:?}", a.level).to_lowercase());
    m.output("report", a.out, to_pretty_json(&e)?.as_bytes())?;
    if let Some(t) = a.table {
        m.output("table", t, e.to_table().as_bytes())?;
    }
    m.save(&sidecar_manifest(a.out))?;
    Ok(e)
}

pub(crate) fn write_pipeline_split(
    m: &mut Manifest,
    dir: &Path,
    split: &DatasetSplit<AnnotatedSentence>,
    stats: &SplitStats,
) -> Result<()> {
    write_split(m, dir, split, stats)
}

/// Writes `content` into `dir/name` and records it in the manifest.
pub(crate) fn emit(m: &mut Manifest, dir: &Path, name: &str, content: &[u8]) -> Result<()> {
    m.output(name, &dir.join(name), content)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(text: &str, spans: &[(&str, usize, usize)]) -> SentenceRecord {
        SentenceRecord {
            doc_id: "d".into(),
            doc_offset: 0,
            text: text.into(),
            spans: spans
                .iter()
                .map(|&(l, s, e)| crate::corpus::SpanRecord {
                    label: l.into(),
                    start: s,
                    end: e,
                })
                .collect(),
        }
    }

    #[test]
    fn projects_through_identity_links() {
        let src = vec![rec("take aspirin now", &[("Drug", 5, 12)])];
        let tgt = vec!["nimm Aspirin jetzt".to_string()];
        let links = vec![AlignmentLinks::identity(3)];
        let (out, report) = project_all(&src, &tgt, &links, &Tokenizer::default()).unwrap();
        assert_eq!(out[0].spans[0].first, 1);
        assert_eq!(out[0].spans[0].char_start, 5);
        assert_eq!(out[0].spans[0].char_end, 12);
        assert_eq!(report.total.projected, 1);
    }

    #[test]
    fn count_mismatch_is_shape_error() {
        let src = vec![rec("a", &[])];
        let err = project_all(&src, &[], &[], &Tokenizer::default()).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
        assert!(parallel_text(&src, &[]).is_err());
    }

    #[test]
    fn tag_input_formats() {
        let tk = Tokenizer::default();
        let plain = read_tag_input("Take aspirin.\nNow", &tk).unwrap();
        assert_eq!(plain.len(), 2);
        assert_eq!(plain[0].surfaces(), ["Take", "aspirin", "."]);
        let json = read_tag_input("{\"text\":\"Take aspirin.\"}\n", &tk).unwrap();
        assert_eq!(json, plain[..1].to_vec());
    }

    #[test]
    fn split_resolves_overlaps() {
        let mut s = AnnotatedSentence::unlabeled(crate::tokenizer::tokenize("a b c d"));
        s.push_span("Drug", 0, 2).unwrap();
        s.push_span("Dosage", 2, 3).unwrap();
        s.push_span("ADE", 3, 3).unwrap();
        let data = vec![s.clone(), s.clone(), s];
        let (split, stats) = build_splits(
            data,
            &crate::projection::default_dropped_labels(),
            true,
            SplitRatios::default(),
            1,
        )
        .unwrap();
        assert_eq!(stats.kept_sentences, 3);
        for p in split
            .train
            .iter()
            .chain(&split.validation)
            .chain(&split.test)
        {
            assert_eq!(p.spans.len(), 1);
            assert_eq!(p.spans[0].label, "Drug");
        }
    }
}
