//! Pipeline configuration: flat `section.key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown and
//! duplicate keys are errors. Lists are comma separated, optionally in
//! brackets. Relative paths resolve against the config file's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::align::{DistortionMode, DEFAULT_LENGTH_CAP, DEFAULT_MAX_PAIR_LEN};
use crate::corpus::SegmenterConfig;
use crate::error::{Error, Result};
use crate::eval::Level;
use crate::projection::{default_dropped_labels, SplitRatios};
use crate::synthetic::DEFAULT_PLACEHOLDER_PATTERN;
use crate::tagger::{Hyperparams, Optimizer};

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    /// Directory of `<doc>.txt` / `<doc>.ann` pairs.
    pub corpus_dir: PathBuf,
    /// Target-language sentences, one per synthesized source sentence.
    pub target_file: PathBuf,
    /// Precomputed Pharaoh alignments; alignment is trained when absent.
    pub alignment_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Extra gold JSONL to score the tagger on.
    pub external_gold: Option<PathBuf>,
    pub label_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub synthesis: u64,
    pub split: u64,
    pub training: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub synthesize: bool,
    pub train: bool,
    pub evaluate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignSettings {
    pub ibm1_iterations: usize,
    pub ibm2_iterations: usize,
    pub distortion: DistortionMode,
    pub max_pair_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub seeds: Seeds,
    pub stages: Stages,
    pub segmenter: SegmenterConfig,
    pub placeholder_pattern: String,
    pub align: AlignSettings,
    pub dropped_labels: BTreeSet<String>,
    pub drop_empty: bool,
    pub ratios: SplitRatios,
    /// Tagger settings; the seed comes from `seeds.training`.
    pub tagger: Hyperparams,
    pub eval_level: Level,
    /// Every key with its effective value, as recorded in manifests.
    pub normalized: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "paths.corpus_dir",
    "paths.target_file",
    "paths.alignment_file",
    "paths.output_dir",
    "paths.external_gold",
    "paths.label_map",
    "seeds.synthesis",
    "seeds.split",
    "seeds.training",
    "stages.synthesize",
    "stages.train",
    "stages.evaluate",
    "segmenter.abbreviations",
    "synthesis.pattern",
    "align.ibm1_iterations",
    "align.ibm2_iterations",
    "align.distortion",
    "align.length_cap",
    "align.tension",
    "align.null_prob",
    "align.max_pair_len",
    "data.dropped_labels",
    "data.drop_empty",
    "data.ratios",
    "tagger.dim",
    "tagger.rows",
    "tagger.hashes",
    "tagger.window",
    "tagger.depth",
    "tagger.hidden",
    "tagger.learning_rate",
    "tagger.batch_size",
    "tagger.epochs",
    "tagger.optimizer",
    "eval.level",
];

/// Parses `key = value` lines into a map, rejecting duplicates.
pub fn parse_key_values(content: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `section.key = value`".into(),
        })?;
        let key = k.trim().to_string();
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if map.insert(key.clone(), value.to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key}",
                i + 1
            )));
        }
    }
    Ok(map)
}

fn list(value: &str) -> Vec<String> {
    let v = value.trim();
    let v = v
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .unwrap_or(v);
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

struct Reader {
    values: BTreeMap<String, String>,
    base: PathBuf,
    normalized: BTreeMap<String, String>,
}

impl Reader {
    fn raw(&mut self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("{key}: cannot parse {v:?}: {e}"))),
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.normalized.insert(key.into(), value.to_string());
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key)?;
        self.note(key, &v);
        let p = PathBuf::from(v);
        Some(if p.is_absolute() {
            p
        } else {
            self.base.join(p)
        })
    }

    fn required_path(&mut self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::Config(format!("{key} is required")))
    }
}

macro_rules! field {
    ($r:expr, $key:expr, $default:expr) => {{
        let v = $r.get($key, $default)?;
        $r.note($key, &v);
        v
    }};
}

impl PipelineConfig {
    /// Reads and validates a config file. Input paths must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let content = crate::io::read_text(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let cfg = Self::parse(&content, &base)?;
        cfg.check_inputs()?;
        Ok(cfg)
    }

    /// Parses config text, resolving relative paths against `base`.
    /// Does not touch the file system.
    pub fn parse(content: &str, base: &Path) -> Result<Self> {
        let values = parse_key_values(content)?;
        let unknown: Vec<&str> = values
            .keys()
            .map(String::as_str)
            .filter(|k| !KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )));
        }
        let mut r = Reader {
            values,
            base: base.to_path_buf(),
            normalized: BTreeMap::new(),
        };

        let paths = Paths {
            corpus_dir: r.required_path("paths.corpus_dir")?,
            target_file: r.required_path("paths.target_file")?,
            alignment_file: r.path("paths.alignment_file"),
            output_dir: match r.path("paths.output_dir") {
                Some(p) => p,
                None => {
                    r.note("paths.output_dir", "out");
                    base.join("out")
                }
            },
            external_gold: r.path("paths.external_gold"),
            label_map: r.path("paths.label_map"),
        };
        if paths.label_map.is_some() && paths.external_gold.is_none() {
            return Err(Error::Config(
                "paths.label_map needs paths.external_gold".into(),
            ));
        }

        let seeds = Seeds {
            synthesis: field!(r, "seeds.synthesis", 0u64),
            split: field!(r, "seeds.split", 0u64),
            training: field!(r, "seeds.training", 0u64),
        };
        let stages = Stages {
            synthesize: field!(r, "stages.synthesize", true),
            train: field!(r, "stages.train", true),
            evaluate: field!(r, "stages.evaluate", true),
        };
        if stages.evaluate && !stages.train {
            return Err(Error::Config("stages.evaluate needs stages.train".into()));
        }

        let segmenter = match r.raw("segmenter.abbreviations") {
            Some(v) => SegmenterConfig {
                abbreviations: list(&v).into_iter().collect(),
            },
            None => SegmenterConfig::default(),
        };
        let abbrevs: Vec<&str> = segmenter.abbreviations.iter().map(String::as_str).collect();
        r.note("segmenter.abbreviations", abbrevs.join(","));

        let placeholder_pattern = field!(
            r,
            "synthesis.pattern",
            DEFAULT_PLACEHOLDER_PATTERN.to_string()
        );
        regex::Regex::new(&placeholder_pattern)
            .map_err(|e| Error::Config(format!("synthesis.pattern: {e}")))?;

        let ibm1_iterations = field!(r, "align.ibm1_iterations", 5usize);
        let ibm2_iterations = field!(r, "align.ibm2_iterations", 5usize);
        if ibm1_iterations == 0 || ibm2_iterations == 0 {
            return Err(Error::Config(
                "align.ibm1_iterations and align.ibm2_iterations must be at least 1".into(),
            ));
        }
        let kind = field!(r, "align.distortion", "learned".to_string());
        let distortion = match kind.as_str() {
            "learned" => {
                let cap = field!(r, "align.length_cap", DEFAULT_LENGTH_CAP);
                if cap == 0 {
                    return Err(Error::Config("align.length_cap must be positive".into()));
                }
                DistortionMode::Learned { cap }
            }
            "diagonal" => {
                let tension = field!(r, "align.tension", 4.0f64);
                let null_prob = field!(r, "align.null_prob", 0.1f64);
                if !(tension > 0.0 && tension.is_finite()) {
                    return Err(Error::Config("align.tension must be positive".into()));
                }
                if !(0.0..1.0).contains(&null_prob) {
                    return Err(Error::Config("align.null_prob must be in [0, 1)".into()));
                }
                DistortionMode::Diagonal { tension, null_prob }
            }
            other => {
                return Err(Error::Config(format!(
                    "align.distortion must be learned or diagonal, not {other:?}"
                )))
            }
        };
        let max_pair_len = field!(r, "align.max_pair_len", DEFAULT_MAX_PAIR_LEN);

        let dropped_labels: BTreeSet<String> = match r.raw("data.dropped_labels") {
            Some(v) => list(&v).into_iter().collect(),
            None => default_dropped_labels(),
        };
        let dl: Vec<&str> = dropped_labels.iter().map(String::as_str).collect();
        r.note("data.dropped_labels", dl.join(","));
        let drop_empty = field!(r, "data.drop_empty", true);
        let ratios = match r.raw("data.ratios") {
            Some(v) => v
                .parse::<SplitRatios>()
                .map_err(|e| Error::Config(format!("data.ratios: {e}")))?,
            None => SplitRatios::default(),
        };
        r.note(
            "data.ratios",
            format!("{},{},{}", ratios.train, ratios.validation, ratios.test),
        );

        let d = Hyperparams::default();
        let tagger = Hyperparams {
            dim: field!(r, "tagger.dim", d.dim),
            rows: field!(r, "tagger.rows", d.rows),
            hashes: field!(r, "tagger.hashes", d.hashes),
            window: field!(r, "tagger.window", d.window),
            depth: field!(r, "tagger.depth", d.depth),
            hidden: field!(r, "tagger.hidden", d.hidden),
            learning_rate: field!(r, "tagger.learning_rate", d.learning_rate),
            batch_size: field!(r, "tagger.batch_size", d.batch_size),
            epochs: field!(r, "tagger.epochs", d.epochs),
            optimizer: {
                let v = r.get("tagger.optimizer", optimizer_name(d.optimizer).to_string())?;
                let o: Optimizer = v.parse()?;
                r.note("tagger.optimizer", optimizer_name(o));
                o
            },
            seed: seeds.training,
        };
        tagger.validate()?;

        let eval_level = {
            let v = r.get("eval.level", "both".to_string())?;
            let l: Level = v.parse()?;
            r.note("eval.level", &v);
            l
        };

        Ok(PipelineConfig {
            paths,
            seeds,
            stages,
            segmenter,
            placeholder_pattern,
            align: AlignSettings {
                ibm1_iterations,
                ibm2_iterations,
                distortion,
                max_pair_len,
            },
            dropped_labels,
            drop_empty,
            ratios,
            tagger,
            eval_level,
            normalized: r.normalized,
        })
    }

    /// Fails with [`Error::MissingInput`] for the first absent input path.
    pub fn check_inputs(&self) -> Result<()> {
        let p = &self.paths;
        let inputs = [Some(&p.corpus_dir), Some(&p.target_file)]
            .into_iter()
            .chain([
                p.alignment_file.as_ref(),
                p.external_gold.as_ref(),
                p.label_map.as_ref(),
            ])
            .flatten();
        for path in inputs {
            if !path.exists() {
                return Err(Error::MissingInput(path.clone()));
            }
        }
        Ok(())
    }

    /// The normalized config as `key = value` lines.
    pub fn to_text(&self) -> String {
        self.normalized
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

pub fn optimizer_name(o: Optimizer) -> &'static str {
    match o {
        Optimizer::Sgd => "sgd",
        Optimizer::Adam => "adam",
    }
}

/// Reads tagger hyperparameters from `tagger.*` keys; missing keys keep
/// their defaults and `seed` may be given as `seeds.training`.
pub fn parse_hyperparams(content: &str) -> Result<Hyperparams> {
    let values = parse_key_values(content)?;
    let unknown: Vec<&str> = values
        .keys()
        .map(String::as_str)
        .filter(|k| !(k.starts_with("tagger.") && KEYS.contains(k)) && *k != "seeds.training")
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Config(format!(
            "unknown keys: {}",
            unknown.join(", ")
        )));
    }
    let mut text = String::from("paths.corpus_dir = .\npaths.target_file = .\n");
    for (k, v) in &values {
        text.push_str(&format!("{k} = {v}\n"));
    }
    Ok(PipelineConfig::parse(&text, Path::new("."))?.tagger)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "paths.corpus_dir = corpus\npaths.target_file = target.txt\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.paths.corpus_dir, PathBuf::from("/base/corpus"));
        assert_eq!(c.paths.output_dir, PathBuf::from("/base/out"));
        assert_eq!(c.ratios, SplitRatios::default());
        assert_eq!(c.dropped_labels, default_dropped_labels());
        assert_eq!(c.tagger, Hyperparams::default());
        assert_eq!(c.align.distortion, DistortionMode::default());
        assert_eq!(
            c.normalized.len(),
            KEYS.len() - 5,
            "{:?}",
            c.normalized.keys()
        );
        assert!(c.to_text().contains("data.ratios = 0.8,0.1,0.1"));
    }

    #[test]
    fn dropped_labels_in_brackets() {
        let text = format!("{MINIMAL}data.dropped_labels = [ADE, Reason, Route]\n");
        let c = PipelineConfig::parse(&text, Path::new(".")).unwrap();
        assert_eq!(c.dropped_labels, default_dropped_labels());
    }

    #[test]
    fn bad_ratios_name_the_field() {
        let text = format!("{MINIMAL}data.ratios = 0.7,0.1,0.1\n");
        let err = PipelineConfig::parse(&text, Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("data.ratios"), "{err}");
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let dup = format!("{MINIMAL}seeds.split = 1\nseeds.split = 2\n");
        assert!(matches!(
            PipelineConfig::parse(&dup, Path::new(".")),
            Err(Error::Config(m)) if m.contains("duplicate")
        ));
        let unk = format!("{MINIMAL}seeds.spilt = 1\ntagger.width = 3\n");
        let err = PipelineConfig::parse(&unk, Path::new(".")).unwrap_err();
        assert!(
            err.to_string().contains("seeds.spilt, tagger.width"),
            "{err}"
        );
    }

    #[test]
    fn missing_required_path() {
        let err = PipelineConfig::parse("paths.corpus_dir = c\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("paths.target_file"));
    }

    #[test]
    fn comments_quotes_and_settings() {
        let text = format!(
            "# toy\n{MINIMAL}tagger.epochs = \"3\"\nalign.distortion = diagonal\nalign.tension = 2\nseeds.training = 9\n"
        );
        let c = PipelineConfig::parse(&text, Path::new(".")).unwrap();
        assert_eq!(c.tagger.epochs, 3);
        assert_eq!(c.tagger.seed, 9);
        assert_eq!(
            c.align.distortion,
            DistortionMode::Diagonal {
                tension: 2.0,
                null_prob: 0.1
            }
        );
    }

    #[test]
    fn hyperparams_file() {
        let h = parse_hyperparams("tagger.dim = 8\nseeds.training = 4\n").unwrap();
        assert_eq!((h.dim, h.seed, h.rows), (8, 4, 4096));
        assert!(parse_hyperparams("paths.corpus_dir = x\n").is_err());
    }
}
