//! Token- and character-level scores, with a label map for foreign gold data.
//!
//! cargo run --example evaluate

use projner::eval::{evaluate, map_labels, CharSpan, EvalSentence, LabelMap, Level};
use projner::tokenizer::Tokenizer;

fn main() -> projner::Result<()> {
    let tk = Tokenizer::default();
    let text = "Gib Aspirin 81 mg täglich gegen Fieber";
    let span = |label: &str, start, end| CharSpan {
        label: label.into(),
        start,
        end,
    };
    let gold = vec![EvalSentence::from_char_spans(
        text.into(),
        vec![span("CHEM", 4, 11), span("DISEASE", 32, 38)],
        &tk,
    )?];
    let pred = vec![EvalSentence::from_char_spans(
        text.into(),
        vec![span("Drug", 4, 11), span("Drug", 12, 17)],
        &tk,
    )?];
    let map = LabelMap::parse("CHEM = Drug\nDISEASE =\n")?;
    let gold = map_labels(gold, &map)?;
    let result = evaluate(&gold, &pred, Level::Both, None)?;
    print!("{}", result.to_table());
    Ok(())
}
