//! Train the BILOU tagger on a handful of sentences and tag new text.
//!
//! cargo run --release --example train_tagger

use projner::projection::AnnotatedSentence;
use projner::stages::{tag_tokenized, train_on};
use projner::tagger::Hyperparams;
use projner::tokenizer::tokenize;

fn sentence(text: &str, spans: &[(&str, usize, usize)]) -> projner::Result<AnnotatedSentence> {
    let mut s = AnnotatedSentence::unlabeled(tokenize(text));
    for &(label, first, last) in spans {
        s.push_span(label, first, last)?;
    }
    Ok(s)
}

fn main() -> projner::Result<()> {
    let drugs = ["Aspirin", "Heparin", "Warfarin", "Metformin", "Ibuprofen"];
    let mut train = Vec::new();
    for (i, d) in drugs.iter().enumerate() {
        let dose = 100 * (i + 1);
        train.push(sentence(
            &format!("Nimm {d} {dose} mg täglich ."),
            &[("Drug", 1, 1), ("Strength", 2, 3)],
        )?);
        train.push(sentence(
            &format!("{d} wurde abgesetzt ."),
            &[("Drug", 0, 0)],
        )?);
        train.push(sentence(
            &format!("Er bekam {dose} mg {d} ."),
            &[("Strength", 2, 3), ("Drug", 4, 4)],
        )?);
    }
    let h = Hyperparams {
        dim: 32,
        rows: 512,
        hidden: 32,
        epochs: 40,
        batch_size: 4,
        ..Hyperparams::default()
    };
    let outcome = train_on(&train, &[], h)?;
    let last = outcome.history.last().unwrap();
    println!(
        "epoch {} loss {:.4} accuracy {:.3}",
        last.epoch, last.train_loss, last.train_accuracy
    );
    let tagged = tag_tokenized(&outcome.model, tokenize("Nimm Heparin 300 mg ."))?;
    for s in &tagged.spans {
        println!("{:<9} tokens {}..={}", s.label, s.first, s.last);
    }
    Ok(())
}
