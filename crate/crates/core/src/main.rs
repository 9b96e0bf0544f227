use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use projner::align::{DistortionMode, DEFAULT_LENGTH_CAP, DEFAULT_MAX_PAIR_LEN};
use projner::config::{parse_hyperparams, PipelineConfig};
use projner::corpus::SegmenterConfig;
use projner::eval::Level;
use projner::io::read_text;
use projner::pipeline::run_pipeline;
use projner::projection::{default_dropped_labels, SplitRatios};
use projner::stages::{self, AlignTrainArgs, EvaluateArgs, SplitArgs};
use projner::synthetic::DEFAULT_PLACEHOLDER_PATTERN;
use projner::tagger::Hyperparams;
use projner::{Error, Result};

/// Annotation projection and BILOU entity tagging. Log verbosity comes from
/// the PROJNER_LOG environment variable (error, warn, info, debug).
#[derive(Parser)]
#[command(name = "projner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read `<doc>.txt`/`<doc>.ann` pairs into document records.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split document records into sentence records.
    Sentencize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated abbreviations that never end a sentence.
        #[arg(long)]
        abbreviations: Option<String>,
    },
    /// Replace placeholders with seeded synthetic values.
    Synthesize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = DEFAULT_PLACEHOLDER_PATTERN)]
        pattern: String,
    },
    /// Tokenize one sentence per line into JSON records.
    Tokenize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train IBM Model 1 then Model 2 on a ` ||| ` parallel file.
    AlignTrain(AlignTrainCmd),
    /// Viterbi-align a parallel file into Pharaoh lines.
    Align {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project sentence annotations onto target sentences.
    Project {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        align: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Projection report path (default: `<out>.report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Filter, resolve overlaps and split a projected dataset.
    Split(SplitCmd),
    /// Train the tagger.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// File of `tagger.key = value` lines.
        #[arg(long)]
        hyperparams: Option<PathBuf>,
        /// Overrides the training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tag plain text lines or JSON records.
    Tag {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against gold data.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// `external=internal` lines applied to the gold labels.
        #[arg(long)]
        label_map: Option<PathBuf>,
        #[arg(long, default_value = "both")]
        level: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Run every stage from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `paths.output_dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AlignTrainCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    ibm1_iters: usize,
    #[arg(long, default_value_t = 5)]
    ibm2_iters: usize,
    #[arg(long)]
    model: PathBuf,
    /// `learned` or `diagonal`.
    #[arg(long, default_value = "learned")]
    distortion: String,
    #[arg(long, default_value_t = DEFAULT_LENGTH_CAP)]
    length_cap: usize,
    #[arg(long, default_value_t = 4.0)]
    tension: f64,
    #[arg(long, default_value_t = 0.1)]
    null_prob: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PAIR_LEN)]
    max_pair_len: usize,
}

#[derive(Args)]
struct SplitCmd {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated labels to drop (default: ADE,Reason,Route).
    #[arg(long)]
    drop_labels: Option<String>,
    /// Keep sentences that end up without spans.
    #[arg(long)]
    keep_empty: bool,
}

fn comma_set(s: &str) -> BTreeSet<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::to_string)
        .collect()
}

fn run(cmd: Command) -> Result<String> {
    Ok(match cmd {
        Command::Ingest { corpus, out } => {
            format!("{} documents", stages::run_ingest(&corpus, &out)?)
        }
        Command::Sentencize {
            input,
            out,
            abbreviations,
        } => {
            let config = match abbreviations {
                Some(a) => SegmenterConfig {
                    abbreviations: comma_set(&a),
                },
                None => SegmenterConfig::default(),
            };
            format!(
                "{} sentences",
                stages::run_sentencize(&input, &out, &config)?
            )
        }
        Command::Synthesize {
            input,
            out,
            seed,
            pattern,
        } => format!(
            "{} sentences",
            stages::run_synthesize(&input, &out, seed, &pattern)?
        ),
        Command::Tokenize { input, out } => {
            format!("{} lines", stages::run_tokenize(&input, &out)?)
        }
        Command::AlignTrain(a) => {
            let mode = match a.distortion.as_str() {
                "learned" => DistortionMode::Learned { cap: a.length_cap },
                "diagonal" => DistortionMode::Diagonal {
                    tension: a.tension,
                    null_prob: a.null_prob,
                },
                other => {
                    return Err(Error::Config(format!(
                        "--distortion must be learned or diagonal, not {other:?}"
                    )))
                }
            };
            let log = stages::run_align_train(&AlignTrainArgs {
                corpus: &a.corpus,
                model: &a.model,
                ibm1_iterations: a.ibm1_iters,
                ibm2_iterations: a.ibm2_iters,
                mode,
                max_pair_len: a.max_pair_len,
            })?;
            format!(
                "final log-likelihood {}",
                log.ibm2_log_likelihood.last().copied().unwrap_or(f64::NAN)
            )
        }
        Command::Align { model, corpus, out } => {
            format!(
                "{} pairs aligned",
                stages::run_align(&model, &corpus, &out)?
            )
        }
        Command::Project {
            src,
            tgt,
            align,
            out,
            report,
        } => {
            let r = stages::run_project(&src, &tgt, &align, &out, report.as_deref())?;
            format!(
                "{} projected, {} dropped, {} of {} sentences with spans",
                r.total.projected, r.total.dropped, r.sentences_with_spans, r.sentences
            )
        }
        Command::Split(a) => {
            let ratios: SplitRatios = a.ratios.parse()?;
            let dropped = a
                .drop_labels
                .as_deref()
                .map(comma_set)
                .unwrap_or_else(default_dropped_labels);
            let s = stages::run_split(&SplitArgs {
                input: &a.input,
                out_dir: &a.out_dir,
                ratios,
                seed: a.seed,
                dropped_labels: &dropped,
                drop_empty: !a.keep_empty,
            })?;
            format!(
                "train {} / validation {} / test {} sentences",
                s.train.sentences, s.validation.sentences, s.test.sentences
            )
        }
        Command::Train {
            train,
            val,
            out,
            hyperparams,
            seed,
        } => {
            let mut h = match hyperparams {
                Some(p) => parse_hyperparams(&read_text(&p)?)?,
                None => Hyperparams::default(),
            };
            if let Some(s) = seed {
                h.seed = s;
            }
            let o = stages::run_train(&train, &val, &out, h)?;
            format!("best epoch {}", o.best_epoch)
        }
        Command::Tag { model, input, out } => {
            format!(
                "{} sentences tagged",
                stages::run_tag(&model, &input, &out)?
            )
        }
        Command::Evaluate {
            gold,
            pred,
            label_map,
            level,
            out,
            table,
        } => {
            let level: Level = level.parse()?;
            let e = stages::run_evaluate(&EvaluateArgs {
                gold: &gold,
                pred: &pred,
                label_map: label_map.as_deref(),
                level,
                out: &out,
                table: table.as_deref(),
            })?;
            e.to_table()
        }
        Command::Pipeline { config, out_dir } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.paths.output_dir = d;
            }
            let s = run_pipeline(&cfg)?;
            let mut msg = format!(
                "{} documents, {} sentences, splits {}/{}/{}",
                s.documents,
                s.sentences,
                s.split.train.sentences,
                s.split.validation.sentences,
                s.split.test.sentences
            );
            if let Some(e) = &s.evaluation {
                msg.push('\n');
                msg.push_str(&e.to_table());
            }
            msg
        }
    })
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROJNER_LOG", "warn"))
        .format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
