//! Minibatch training with teacher forcing and best-validation selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bilou::{encode_bilou, Action, TagInventory, TokenSpan};
use super::model::{Hyperparams, Optimizer, Params, TaggerModel};
use crate::error::{Error, Result};
use crate::hash::splitmix64;
use crate::projection::AnnotatedSentence;

/// Token surfaces with their gold action sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub tokens: Vec<String>,
    pub gold: Vec<Action>,
}

impl TrainingExample {
    pub fn from_sentence(sentence: &AnnotatedSentence, inventory: &TagInventory) -> Result<Self> {
        let spans: Vec<TokenSpan> = sentence.spans.iter().map(TokenSpan::from).collect();
        Ok(TrainingExample {
            tokens: sentence.tokens.iter().map(|t| t.surface.clone()).collect(),
            gold: encode_bilou(sentence.tokens.len(), &spans, inventory)?,
        })
    }

    fn token_refs(&self) -> Vec<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }
}

/// Encodes every sentence, naming the failing sentence on error.
pub fn examples_from(
    sentences: &[AnnotatedSentence],
    inventory: &TagInventory,
) -> Result<Vec<TrainingExample>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            TrainingExample::from_sentence(s, inventory).map_err(|e| Error::Shape {
                sentence: i,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Inventory covering every label in the sentences.
pub fn inventory_of(sentences: &[AnnotatedSentence]) -> TagInventory {
    TagInventory::new(
        sentences
            .iter()
            .flat_map(|s| s.spans.iter().map(|sp| sp.label.clone())),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy per token over the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// The best-validation snapshot, or the final weights without validation data.
    pub model: TaggerModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Fraction of tokens whose greedy action equals the gold action.
pub fn token_accuracy(model: &TaggerModel, examples: &[TrainingExample]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for ex in examples {
        let pred = model.greedy_parse(&ex.tokens);
        hit += pred.iter().zip(&ex.gold).filter(|(a, b)| a == b).count();
        total += ex.gold.len();
    }
    if total == 0 {
        return 1.0;
    }
    hit as f64 / total as f64
}

/// Mean per-token loss of a model over examples, summed in example order.
pub fn mean_loss(model: &TaggerModel, examples: &[TrainingExample]) -> Result<f64> {
    let mut loss = 0.0;
    let mut tokens = 0usize;
    for ex in examples {
        loss += model.loss_and_grad(&ex.token_refs(), &ex.gold, None)?;
        tokens += ex.gold.len();
    }
    Ok(if tokens == 0 {
        0.0
    } else {
        loss / tokens as f64
    })
}

struct AdamState {
    m: Params,
    v: Params,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

fn apply_update(params: &mut Params, grad: &Params, lr: f64, adam: &mut Option<AdamState>) {
    match adam {
        None => {
            for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                for (x, dx) in p.iter_mut().zip(g) {
                    *x -= lr * dx;
                }
            }
        }
        Some(state) => {
            state.step += 1;
            let c1 = 1.0 - BETA1.powi(state.step);
            let c2 = 1.0 - BETA2.powi(state.step);
            let tensors = params
                .tensors_mut()
                .into_iter()
                .zip(grad.tensors())
                .zip(state.m.tensors_mut())
                .zip(state.v.tensors_mut());
            for (((p, g), m), v) in tensors {
                for i in 0..p.len() {
                    if g[i] == 0.0 && m[i] == 0.0 {
                        continue;
                    }
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPSILON);
                }
            }
        }
    }
}

/// Trains a fresh model. Each epoch shuffles the training examples with a
/// seed derived from the hyperparameter seed and epoch, then takes one
/// optimizer step per minibatch on the token-averaged cross-entropy.
pub fn train_tagger(
    train: &[TrainingExample],
    validation: &[TrainingExample],
    inventory: TagInventory,
    hyperparams: Hyperparams,
) -> Result<TrainingOutcome> {
    let model = TaggerModel::new(inventory, hyperparams)?;
    continue_training(model, train, validation)
}

/// Trains an existing model for `hyperparams.epochs` more epochs.
pub fn continue_training(
    model: TaggerModel,
    train: &[TrainingExample],
    validation: &[TrainingExample],
) -> Result<TrainingOutcome> {
    train_with_callback(model, train, validation, |_, _| true)
}

/// Like [`continue_training`], calling `on_epoch` after every epoch with its
/// record and the current weights. Training stops early when it returns false.
pub fn train_with_callback(
    mut model: TaggerModel,
    train: &[TrainingExample],
    validation: &[TrainingExample],
    mut on_epoch: impl FnMut(&EpochRecord, &TaggerModel) -> bool,
) -> Result<TrainingOutcome> {
    let h = model.hyperparams.clone();
    h.validate()?;
    for (i, ex) in train.iter().chain(validation).enumerate() {
        if ex.tokens.len() != ex.gold.len() {
            return Err(Error::Shape {
                sentence: i,
                message: format!(
                    "{} tokens but {} gold actions",
                    ex.tokens.len(),
                    ex.gold.len()
                ),
            });
        }
    }
    let mut adam = match h.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam => Some(AdamState {
            m: model.params.zeros_like(),
            v: model.params.zeros_like(),
            step: 0,
        }),
    };

    let mut history = Vec::with_capacity(h.epochs);
    let mut best: Option<(f64, usize, Params)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = model.params.zeros_like();
    let mut sentence_loss = vec![0.0; train.len()];
    let total_tokens: usize = train.iter().map(|e| e.gold.len()).sum();

    for epoch in 1..=h.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(h.seed ^ splitmix64(epoch as u64)));
        order.sort_unstable();
        order.shuffle(&mut rng);
        for batch in order.chunks(h.batch_size) {
            let tokens: usize = batch.iter().map(|&i| train[i].gold.len()).sum();
            if tokens == 0 {
                continue;
            }
            grad.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            let scale = 1.0 / tokens as f64;
            for &i in batch {
                let ex = &train[i];
                sentence_loss[i] =
                    model.loss_and_grad(&ex.token_refs(), &ex.gold, Some((&mut grad, scale)))?;
            }
            apply_update(&mut model.params, &grad, h.learning_rate, &mut adam);
        }
        let loss_sum: f64 = sentence_loss.iter().sum();
        let train_loss = if total_tokens == 0 {
            0.0
        } else {
            loss_sum / total_tokens as f64
        };
        let train_accuracy = token_accuracy(&model, train);
        let validation_accuracy =
            (!validation.is_empty()).then(|| token_accuracy(&model, validation));
        log::info!(
            "epoch {epoch}: loss {train_loss:.6} train acc {train_accuracy:.4} val acc {}",
            validation_accuracy.map_or("-".into(), |v| format!("{v:.4}"))
        );
        if let Some(acc) = validation_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.params.clone()));
            }
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            validation_accuracy,
        };
        let keep_going = on_epoch(&record, &model);
        history.push(record);
        if !keep_going {
            break;
        }
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            model.params = params;
            epoch
        }
        None => history.len(),
    };
    Ok(TrainingOutcome {
        model,
        history,
        best_epoch,
    })
}
