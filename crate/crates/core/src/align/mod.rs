//! Statistical word alignment: IBM Models 1 and 2, Viterbi decoding and
//! the Pharaoh link format.

mod corpus;
mod ibm;
mod pharaoh;

pub use corpus::{
    read_parallel_file, split_parallel_line, ParallelCorpus, DEFAULT_MAX_PAIR_LEN,
    PARALLEL_DELIMITER,
};
pub use ibm::{
    train_ibm1, train_ibm2, AlignmentModel, Distortion, DistortionMode, EmTrace, TranslationTable,
    DEFAULT_LENGTH_CAP, MODEL_FORMAT, MODEL_VERSION, NULL_WORD, PROB_FLOOR,
};
pub use pharaoh::{emit_pharaoh, parse_pharaoh, AlignmentLinks};
