//! Drop labels, resolve overlaps and make a seeded train/validation/test split.
//!
//! cargo run --example split

use std::collections::BTreeSet;

use projner::projection::{AnnotatedSentence, SplitRatios};
use projner::stages::build_splits;
use projner::tokenizer::tokenize;

fn main() -> projner::Result<()> {
    let mut sentences = Vec::new();
    for i in 0..20 {
        let mut s =
            AnnotatedSentence::unlabeled(tokenize(&format!("gib {i} mg Aspirin gegen Fieber")));
        s.push_span("Strength", 1, 2)?;
        s.push_span("Drug", 3, 3)?;
        if i % 4 == 0 {
            s.push_span("Reason", 5, 5)?;
        }
        if i % 5 == 0 {
            // Overlaps the Strength span; the longer one wins.
            s.push_span("Dosage", 1, 1)?;
        }
        sentences.push(s);
    }
    let dropped: BTreeSet<String> = ["Reason".to_string()].into();
    let (split, stats) = build_splits(sentences, &dropped, true, SplitRatios::default(), 7)?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
    println!("first test sentence: {}", split.test[0].text);
    Ok(())
}
