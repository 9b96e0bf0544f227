//! Carry entity spans across a word alignment.
//!
//! cargo run --example project

use projner::align::parse_pharaoh;
use projner::corpus::{EntitySpan, Sentence};
use projner::projection::project_sentence;
use projner::tokenizer::tokenize;

fn main() -> projner::Result<()> {
    let text = "take aspirin 81 mg daily";
    let target = "täglich 81 mg Aspirin nehmen";
    let sentence = Sentence {
        doc_id: "demo".into(),
        text: text.into(),
        doc_offset: 0,
        spans: vec![
            EntitySpan::over(text, "Drug", 5, 12)?,
            EntitySpan::over(text, "Strength", 13, 18)?,
            EntitySpan::over(text, "Frequency", 19, 24)?,
        ],
    };
    let links = parse_pharaoh("0-4 1-3 2-1 3-2 4-0")?;
    let (projected, report) =
        project_sentence(&sentence, &tokenize(text), &tokenize(target), &links)?;
    for s in &projected.spans {
        let words: Vec<&str> = projected.tokens[s.first..=s.last]
            .iter()
            .map(|t| t.surface.as_str())
            .collect();
        println!("{:<10} {}", s.label, words.join(" "));
    }
    println!("{}", serde_json::to_string_pretty(&report.total).unwrap());
    Ok(())
}
