//! Train IBM Model 1 then Model 2 on a tiny corpus and Viterbi-align it.
//!
//! cargo run --example align

use projner::align::{emit_pharaoh, train_ibm1, train_ibm2, DistortionMode, ParallelCorpus};

fn main() -> projner::Result<()> {
    let raw = [
        ("the house", "das haus"),
        ("the book", "das buch"),
        ("a book", "ein buch"),
        ("a small house", "ein kleines haus"),
    ];
    let corpus = ParallelCorpus::from_whitespace(&raw)?;
    let (t, trace1) = train_ibm1(&corpus, 10)?;
    let (model, trace2) = train_ibm2(&corpus, 10, &t, DistortionMode::default())?;
    println!("ibm1 log-likelihood {:?}", trace1.log_likelihood.last());
    println!("ibm2 log-likelihood {:?}", trace2.log_likelihood.last());
    println!(
        "best target for 'book': {:?}",
        t.argmax_target(Some("book"))
    );
    for (src, tgt) in raw {
        let s: Vec<&str> = src.split(' ').collect();
        let g: Vec<&str> = tgt.split(' ').collect();
        println!(
            "{src} ||| {tgt} ||| {}",
            emit_pharaoh(&model.viterbi_align(&s, &g))
        );
    }
    Ok(())
}
