//! IBM Model 1 and Model 2 lexical translation and distortion models,
//! trained by expectation-maximization.
//!
//! Source position 0 of every internal table is the NULL word. Expected
//! counts are accumulated per contiguous block of sentence pairs and the
//! blocks are merged by a fixed pairwise tree, so the trained parameters do
//! not depend on how many rayon workers ran the expectation step.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::ParallelCorpus;
use super::pharaoh::AlignmentLinks;
use crate::error::{Error, Result};

pub const NULL_WORD: &str = "<NULL>";
pub const PROB_FLOOR: f64 = 1e-12;
pub const DEFAULT_LENGTH_CAP: usize = 50;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;
const EM_BLOCKS: usize = 16;

#[derive(Debug, Clone, Default, PartialEq)]
struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn with_null() -> Self {
        let mut v = Vocab::default();
        v.intern(NULL_WORD);
        v
    }

    fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocab { words, index }
    }

    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.index.insert(w.to_string(), id);
        id
    }

    fn get(&self, w: &str) -> Option<u32> {
        self.index.get(w).copied()
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

/// Lexical translation probabilities `t(target | source)`.
///
/// Rows are stored sparsely over the target words each source word
/// co-occurred with in training; missing entries read as [`PROB_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    source: Vocab,
    target: Vocab,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    probs: Vec<f64>,
}

struct IndexedPair {
    source: Vec<u32>,
    target: Vec<u32>,
}

impl TranslationTable {
    /// Uniform rows over co-occurring pairs, NULL co-occurring with every target word.
    fn uniform_over(corpus: &ParallelCorpus) -> (Self, Vec<IndexedPair>) {
        let mut source = Vocab::with_null();
        let mut target = Vocab::default();
        let mut rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new()];
        let mut indexed = Vec::with_capacity(corpus.len());
        for (src, tgt) in corpus.pairs() {
            let s: Vec<u32> = src.iter().map(|w| source.intern(w)).collect();
            let t: Vec<u32> = tgt.iter().map(|w| target.intern(w)).collect();
            rows.resize_with(source.len(), BTreeSet::new);
            for &e in std::iter::once(&0).chain(&s) {
                rows[e as usize].extend(t.iter().copied());
            }
            indexed.push(IndexedPair {
                source: s,
                target: t,
            });
        }
        let mut row_start = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        for row in &rows {
            row_start.push(cols.len());
            let p = 1.0 / row.len() as f64;
            for &f in row {
                cols.push(f);
                probs.push(p);
            }
        }
        row_start.push(cols.len());
        (
            TranslationTable {
                source,
                target,
                row_start,
                cols,
                probs,
            },
            indexed,
        )
    }

    fn slot(&self, e: u32, f: u32) -> Option<usize> {
        let lo = self.row_start[e as usize];
        let hi = self.row_start[e as usize + 1];
        self.cols[lo..hi].binary_search(&f).ok().map(|k| lo + k)
    }

    fn prob_ids(&self, e: Option<u32>, f: Option<u32>) -> f64 {
        match (e, f) {
            (Some(e), Some(f)) => self
                .slot(e, f)
                .map_or(PROB_FLOOR, |k| self.probs[k].max(PROB_FLOOR)),
            _ => PROB_FLOOR,
        }
    }

    /// `t(target | source)`; `None` as source means NULL. Unknown pairs read as the floor.
    pub fn prob(&self, source: Option<&str>, target: &str) -> f64 {
        let e = match source {
            None => Some(0),
            Some(w) => self.source.get(w),
        };
        self.prob_ids(e, self.target.get(target))
    }

    /// Stored (unfloored) probability, `None` when the pair has no entry.
    pub fn raw_prob(&self, source: Option<&str>, target: &str) -> Option<f64> {
        let e = match source {
            None => 0,
            Some(w) => self.source.get(w)?,
        };
        self.slot(e, self.target.get(target)?)
            .map(|k| self.probs[k])
    }

    /// Most probable target for `source` (`None` = NULL); ties go to the
    /// earlier target word in vocabulary order.
    pub fn argmax_target(&self, source: Option<&str>) -> Option<&str> {
        let e = match source {
            None => 0,
            Some(w) => self.source.get(w)?,
        } as usize;
        let (lo, hi) = (self.row_start[e], self.row_start[e + 1]);
        let mut best: Option<(usize, f64)> = None;
        for k in lo..hi {
            if best.is_none_or(|(_, p)| self.probs[k] > p) {
                best = Some((k, self.probs[k]));
            }
        }
        best.map(|(k, _)| self.target.words[self.cols[k] as usize].as_str())
    }

    /// Source words (without NULL) in vocabulary order.
    pub fn source_words(&self) -> impl Iterator<Item = &str> {
        self.source.words.iter().skip(1).map(String::as_str)
    }

    pub fn target_words(&self) -> impl Iterator<Item = &str> {
        self.target.words.iter().map(String::as_str)
    }

    /// Sum of every row, NULL first.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.source.len())
            .map(|e| {
                self.probs[self.row_start[e]..self.row_start[e + 1]]
                    .iter()
                    .sum()
            })
            .collect()
    }

    pub fn is_normalized(&self, tolerance: f64) -> bool {
        self.row_sums().iter().all(|s| (s - 1.0).abs() <= tolerance)
            && self.probs.iter().all(|p| (0.0..=1.0).contains(p))
    }

    /// All stored entries as `(source, target, probability)`, NULL spelled [`NULL_WORD`].
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        (0..self.source.len()).flat_map(move |e| {
            (self.row_start[e]..self.row_start[e + 1]).map(move |k| {
                (
                    self.source.words[e].as_str(),
                    self.target.words[self.cols[k] as usize].as_str(),
                    self.probs[k],
                )
            })
        })
    }

    fn index_pair(
        &self,
        source: &[String],
        target: &[String],
    ) -> (Vec<Option<u32>>, Vec<Option<u32>>) {
        (
            source.iter().map(|w| self.source.get(w)).collect(),
            target.iter().map(|w| self.target.get(w)).collect(),
        )
    }

    fn normalize_from_counts(&mut self, counts: &[f64]) {
        for e in 0..self.source.len() {
            let (lo, hi) = (self.row_start[e], self.row_start[e + 1]);
            let total: f64 = counts[lo..hi].iter().sum();
            if total > 0.0 {
                for k in lo..hi {
                    self.probs[k] = counts[k] / total;
                }
            }
        }
    }
}

type BucketKey = (usize, usize, usize);

/// Positional alignment probabilities `a(i | j, l, m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Distortion {
    /// Learned tables keyed by `(j, l, m)` bucket; index 0 of each table is
    /// NULL, index `1 + i` source position `i`. Lengths and positions beyond
    /// `cap` are scaled onto the cap bucket.
    Learned {
        cap: usize,
        buckets: BTreeMap<BucketKey, Vec<f64>>,
    },
    /// Fixed diagonal-favouring distribution: NULL gets `null_prob`, source
    /// position `i` a share proportional to `exp(-tension * |(i+1)/l - (j+1)/m|)`.
    Diagonal { tension: f64, null_prob: f64 },
}

fn scale(pos: usize, len: usize, cap: usize) -> usize {
    if len <= cap {
        pos
    } else {
        pos * cap / len
    }
}

impl Distortion {
    fn uniform(cap: usize) -> Self {
        Distortion::Learned {
            cap,
            buckets: BTreeMap::new(),
        }
    }

    fn bucket_key(cap: usize, j: usize, l: usize, m: usize) -> BucketKey {
        (scale(j, m, cap), l.min(cap), m.min(cap))
    }

    /// Normalized weights over `{NULL, 0..l}` for target position `j`.
    fn weights(&self, j: usize, l: usize, m: usize) -> Vec<f64> {
        match self {
            Distortion::Learned { cap, buckets } => {
                let key = Self::bucket_key(*cap, j, l, m);
                let Some(table) = buckets.get(&key) else {
                    return vec![1.0 / (l + 1) as f64; l + 1];
                };
                let mut w = Vec::with_capacity(l + 1);
                w.push(table[0]);
                if l <= *cap {
                    w.extend_from_slice(&table[1..=l]);
                } else {
                    let mut share = vec![0usize; *cap];
                    for i in 0..l {
                        share[scale(i, l, *cap)] += 1;
                    }
                    for i in 0..l {
                        let cell = scale(i, l, *cap);
                        w.push(table[1 + cell] / share[cell] as f64);
                    }
                }
                w
            }
            Distortion::Diagonal { tension, null_prob } => {
                let mut w = Vec::with_capacity(l + 1);
                w.push(*null_prob);
                let target_rel = (j + 1) as f64 / m as f64;
                let raw: Vec<f64> = (0..l)
                    .map(|i| (-tension * ((i + 1) as f64 / l as f64 - target_rel).abs()).exp())
                    .collect();
                let z: f64 = raw.iter().sum();
                w.extend(raw.iter().map(|r| (1.0 - null_prob) * r / z));
                w
            }
        }
    }

    /// `a(i | j, l, m)`; `None` as source position means NULL.
    pub fn prob(&self, source: Option<usize>, j: usize, l: usize, m: usize) -> f64 {
        let w = self.weights(j, l, m);
        match source {
            None => w[0],
            Some(i) => w[i + 1],
        }
    }

    /// Probability of the NULL alignment for target position `j`.
    pub fn null_prob(&self, j: usize, l: usize, m: usize) -> f64 {
        self.prob(None, j, l, m)
    }

    /// Largest deviation of any learned bucket from summing to one.
    pub fn max_normalization_error(&self) -> f64 {
        match self {
            Distortion::Learned { buckets, .. } => buckets
                .values()
                .map(|t| (t.iter().sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max),
            Distortion::Diagonal { .. } => 0.0,
        }
    }
}

/// Distortion behaviour for IBM Model 2 training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionMode {
    Learned { cap: usize },
    Diagonal { tension: f64, null_prob: f64 },
}

impl Default for DistortionMode {
    fn default() -> Self {
        DistortionMode::Learned {
            cap: DEFAULT_LENGTH_CAP,
        }
    }
}

/// Trained IBM Model 2 parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentModel {
    pub lexicon: TranslationTable,
    pub distortion: Distortion,
}

/// Corpus log-likelihood before the first iteration and after each one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrace {
    pub log_likelihood: Vec<f64>,
}

impl EmTrace {
    /// Largest decrease between consecutive entries (0 if none decreased).
    pub fn max_decrease(&self) -> f64 {
        self.log_likelihood
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

struct BlockCounts {
    lexical: Vec<f64>,
    distortion: BTreeMap<BucketKey, Vec<f64>>,
    log_likelihood: f64,
}

impl BlockCounts {
    fn merge(mut self, other: BlockCounts) -> BlockCounts {
        for (a, b) in self.lexical.iter_mut().zip(&other.lexical) {
            *a += b;
        }
        for (key, counts) in other.distortion {
            match self.distortion.get_mut(&key) {
                Some(mine) => {
                    for (a, b) in mine.iter_mut().zip(&counts) {
                        *a += b;
                    }
                }
                None => {
                    self.distortion.insert(key, counts);
                }
            }
        }
        self.log_likelihood += other.log_likelihood;
        self
    }
}

fn tree_reduce(mut items: Vec<BlockCounts>) -> BlockCounts {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        items = next;
    }
    items.pop().expect("at least one block")
}

fn block_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    let blocks = n.clamp(1, EM_BLOCKS);
    (0..blocks)
        .map(|b| (b * n / blocks)..((b + 1) * n / blocks))
        .collect()
}

/// One expectation pass. With `distortion == None` the alignment prior is
/// uniform (Model 1).
fn expectation(
    table: &TranslationTable,
    pairs: &[IndexedPair],
    distortion: Option<&Distortion>,
    collect_distortion: bool,
) -> BlockCounts {
    let cap = match distortion {
        Some(Distortion::Learned { cap, .. }) => *cap,
        _ => DEFAULT_LENGTH_CAP,
    };
    let blocks: Vec<BlockCounts> = block_ranges(pairs.len())
        .into_par_iter()
        .map(|range| {
            let mut out = BlockCounts {
                lexical: vec![0.0; table.probs.len()],
                distortion: BTreeMap::new(),
                log_likelihood: 0.0,
            };
            let mut weights = Vec::new();
            for pair in &pairs[range] {
                let (l, m) = (pair.source.len(), pair.target.len());
                for (j, &f) in pair.target.iter().enumerate() {
                    let prior = match distortion {
                        Some(d) => d.weights(j, l, m),
                        None => vec![1.0 / (l + 1) as f64; l + 1],
                    };
                    weights.clear();
                    weights.push(table.prob_ids(Some(0), Some(f)) * prior[0]);
                    for (i, &e) in pair.source.iter().enumerate() {
                        weights.push(table.prob_ids(Some(e), Some(f)) * prior[i + 1]);
                    }
                    let denom: f64 = weights.iter().sum();
                    out.log_likelihood += denom.ln();
                    let sources = std::iter::once(0).chain(pair.source.iter().copied());
                    for (w, e) in weights.iter().zip(sources) {
                        if let Some(k) = table.slot(e, f) {
                            out.lexical[k] += w / denom;
                        }
                    }
                    if collect_distortion {
                        let key = Distortion::bucket_key(cap, j, l, m);
                        let cells = out
                            .distortion
                            .entry(key)
                            .or_insert_with(|| vec![0.0; key.1 + 1]);
                        cells[0] += weights[0] / denom;
                        for i in 0..l {
                            cells[1 + scale(i, l, cap)] += weights[i + 1] / denom;
                        }
                    }
                }
            }
            out
        })
        .collect();
    tree_reduce(blocks)
}

fn require_iterations(iterations: usize) -> Result<()> {
    if iterations == 0 {
        return Err(Error::Precondition("iterations must be at least 1".into()));
    }
    Ok(())
}

/// Trains IBM Model 1 from a uniform start.
pub fn train_ibm1(
    corpus: &ParallelCorpus,
    iterations: usize,
) -> Result<(TranslationTable, EmTrace)> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty parallel corpus".into()));
    }
    require_iterations(iterations)?;
    let (mut table, pairs) = TranslationTable::uniform_over(corpus);
    let mut trace = EmTrace::default();
    for it in 0..iterations {
        let counts = expectation(&table, &pairs, None, false);
        trace.log_likelihood.push(counts.log_likelihood);
        table.normalize_from_counts(&counts.lexical);
        log::debug!(
            "ibm1 iteration {} log-likelihood {}",
            it + 1,
            counts.log_likelihood
        );
    }
    trace
        .log_likelihood
        .push(expectation(&table, &pairs, None, false).log_likelihood);
    Ok((table, trace))
}

/// Trains IBM Model 2 starting from `init` (usually a Model 1 table).
pub fn train_ibm2(
    corpus: &ParallelCorpus,
    iterations: usize,
    init: &TranslationTable,
    mode: DistortionMode,
) -> Result<(AlignmentModel, EmTrace)> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty parallel corpus".into()));
    }
    require_iterations(iterations)?;
    if let Some((e, sum)) = init
        .row_sums()
        .into_iter()
        .enumerate()
        .find(|(_, s)| (s - 1.0).abs() > NORMALIZATION_TOLERANCE)
    {
        return Err(Error::Precondition(format!(
            "initial table row {:?} sums to {sum}",
            init.source.words[e]
        )));
    }

    let (mut table, pairs) = TranslationTable::uniform_over(corpus);
    for e in 0..table.source.len() {
        let e_word = &table.source.words[e];
        let init_e = if e == 0 {
            Some(0)
        } else {
            init.source.get(e_word)
        };
        for k in table.row_start[e]..table.row_start[e + 1] {
            let f_word = &table.target.words[table.cols[k] as usize];
            table.probs[k] = init.prob_ids(init_e, init.target.get(f_word));
        }
    }

    let (mut distortion, learn) = match mode {
        DistortionMode::Learned { cap } => {
            if cap == 0 {
                return Err(Error::Precondition(
                    "distortion cap must be positive".into(),
                ));
            }
            (Distortion::uniform(cap), true)
        }
        DistortionMode::Diagonal { tension, null_prob } => {
            if !(0.0..1.0).contains(&null_prob) || !tension.is_finite() {
                return Err(Error::Precondition(
                    "diagonal prior needs 0 <= null_prob < 1 and finite tension".into(),
                ));
            }
            (Distortion::Diagonal { tension, null_prob }, false)
        }
    };

    let mut trace = EmTrace::default();
    for it in 0..iterations {
        let counts = expectation(&table, &pairs, Some(&distortion), learn);
        trace.log_likelihood.push(counts.log_likelihood);
        table.normalize_from_counts(&counts.lexical);
        if let Distortion::Learned { buckets, .. } = &mut distortion {
            *buckets = counts
                .distortion
                .into_iter()
                .map(|(key, cells)| {
                    let total: f64 = cells.iter().sum();
                    (key, cells.iter().map(|c| c / total).collect())
                })
                .collect();
        }
        log::debug!(
            "ibm2 iteration {} log-likelihood {}",
            it + 1,
            counts.log_likelihood
        );
    }
    trace
        .log_likelihood
        .push(expectation(&table, &pairs, Some(&distortion), false).log_likelihood);
    Ok((
        AlignmentModel {
            lexicon: table,
            distortion,
        },
        trace,
    ))
}

impl AlignmentModel {
    /// Per target position, the argmax over NULL and every source position
    /// of `t(f_j | e_i) * a(i | j, l, m)`. NULL is position -1 and wins ties,
    /// as does the smaller source index among real positions. A NULL choice
    /// emits no link.
    pub fn viterbi_align<S: AsRef<str>>(&self, source: &[S], target: &[S]) -> AlignmentLinks {
        let mut links = AlignmentLinks::new();
        if source.is_empty() || target.is_empty() {
            return links;
        }
        let source: Vec<String> = source.iter().map(|s| s.as_ref().to_string()).collect();
        let target: Vec<String> = target.iter().map(|s| s.as_ref().to_string()).collect();
        let (src, tgt) = self.lexicon.index_pair(&source, &target);
        let (l, m) = (src.len(), tgt.len());
        for (j, &f) in tgt.iter().enumerate() {
            let prior = self.distortion.weights(j, l, m);
            let mut best_score = self.lexicon.prob_ids(Some(0), f) * prior[0];
            let mut best: Option<usize> = None;
            for (i, &e) in src.iter().enumerate() {
                let score = self.lexicon.prob_ids(e, f) * prior[i + 1];
                if score > best_score {
                    best_score = score;
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                links.insert(i, j);
            }
        }
        links
    }

    /// Aligns many pairs in parallel; output order follows input order.
    pub fn align_all(&self, pairs: &[(Vec<String>, Vec<String>)]) -> Vec<AlignmentLinks> {
        pairs
            .par_iter()
            .map(|(s, t)| self.viterbi_align(s, t))
            .collect()
    }

    /// Serializes the model as versioned JSON.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ModelFile::from(self)).map_err(|e| Error::json("encoding model", e))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(s).map_err(|e| Error::json("decoding alignment model", e))?;
        file.try_into()
    }
}

pub const MODEL_FORMAT: &str = "projner-ibm2";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    source_vocab: Vec<String>,
    target_vocab: Vec<String>,
    lexicon: Vec<LexiconRow>,
    distortion: DistortionFile,
}

#[derive(Serialize, Deserialize)]
struct LexiconRow {
    source: u32,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistortionFile {
    Learned {
        cap: usize,
        buckets: Vec<BucketFile>,
    },
    Diagonal {
        tension: f64,
        null_prob: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct BucketFile {
    j: usize,
    l: usize,
    m: usize,
    probs: Vec<f64>,
}

impl From<&AlignmentModel> for ModelFile {
    fn from(model: &AlignmentModel) -> Self {
        let t = &model.lexicon;
        let lexicon = (0..t.source.len())
            .map(|e| {
                let (lo, hi) = (t.row_start[e], t.row_start[e + 1]);
                LexiconRow {
                    source: e as u32,
                    targets: t.cols[lo..hi].to_vec(),
                    probs: t.probs[lo..hi].to_vec(),
                }
            })
            .collect();
        let distortion = match &model.distortion {
            Distortion::Learned { cap, buckets } => DistortionFile::Learned {
                cap: *cap,
                buckets: buckets
                    .iter()
                    .map(|(&(j, l, m), probs)| BucketFile {
                        j,
                        l,
                        m,
                        probs: probs.clone(),
                    })
                    .collect(),
            },
            Distortion::Diagonal { tension, null_prob } => DistortionFile::Diagonal {
                tension: *tension,
                null_prob: *null_prob,
            },
        };
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            source_vocab: t.source.words.clone(),
            target_vocab: t.target.words.clone(),
            lexicon,
            distortion,
        }
    }
}

impl TryFrom<ModelFile> for AlignmentModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported alignment model {} v{}",
                file.format, file.version
            )));
        }
        if file.source_vocab.first().map(String::as_str) != Some(NULL_WORD)
            || file.lexicon.len() != file.source_vocab.len()
        {
            return Err(Error::Integrity("malformed lexicon header".into()));
        }
        let mut row_start = Vec::with_capacity(file.lexicon.len() + 1);
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        for (e, row) in file.lexicon.into_iter().enumerate() {
            let sorted = row.targets.windows(2).all(|w| w[0] < w[1]);
            let in_range = row
                .targets
                .iter()
                .all(|&f| (f as usize) < file.target_vocab.len());
            if row.source as usize != e
                || row.targets.len() != row.probs.len()
                || !sorted
                || !in_range
            {
                return Err(Error::Integrity(format!("malformed lexicon row {e}")));
            }
            row_start.push(cols.len());
            cols.extend(row.targets);
            probs.extend(row.probs);
        }
        row_start.push(cols.len());
        let distortion = match file.distortion {
            DistortionFile::Learned { cap, buckets } => {
                let mut map = BTreeMap::new();
                for b in buckets {
                    if b.probs.len() != b.l + 1 || b.l > cap || b.m > cap || b.j >= b.m {
                        return Err(Error::Integrity(format!(
                            "malformed distortion bucket ({}, {}, {})",
                            b.j, b.l, b.m
                        )));
                    }
                    map.insert((b.j, b.l, b.m), b.probs);
                }
                Distortion::Learned { cap, buckets: map }
            }
            DistortionFile::Diagonal { tension, null_prob } => {
                Distortion::Diagonal { tension, null_prob }
            }
        };
        Ok(AlignmentModel {
            lexicon: TranslationTable {
                source: Vocab::from_words(file.source_vocab),
                target: Vocab::from_words(file.target_vocab),
                row_start,
                cols,
                probs,
            },
            distortion,
        })
    }
}
