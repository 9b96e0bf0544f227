//! Cross-lingual annotation projection and a slim BILOU entity tagger.

pub mod align;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hash;
pub mod io;
pub mod pipeline;
pub mod projection;
pub mod stages;
pub mod synthetic;
pub mod tagger;
pub mod text;
pub mod tokenizer;

pub use error::{Error, Result};
