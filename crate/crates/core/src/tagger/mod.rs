//! Transition-based BILOU entity tagger.

pub mod bilou;
pub mod model;
pub mod train;

pub use bilou::{decode_bilou, encode_bilou, valid_actions, Action, TagInventory, TokenSpan};
pub use model::{masked_softmax, Hyperparams, Optimizer, Params, TaggerModel, TransitionState};
pub use train::{
    continue_training, examples_from, inventory_of, mean_loss, token_accuracy, train_tagger,
    train_with_callback, EpochRecord, TrainingExample, TrainingOutcome,
};
