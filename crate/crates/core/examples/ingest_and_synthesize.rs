//! Parse a standoff document, cut it into sentences and fill placeholders.
//!
//! cargo run --example ingest_and_synthesize

use projner::corpus::{parse_standoff, segment_sentences, SegmenterConfig};
use projner::synthetic::{synthesize_placeholders, SyntheticValueSpec};

fn main() -> projner::Result<()> {
    let text =
        "Patient [**Name**] started aspirin 81 mg daily. Stop warfarin b.i.d. on [**Date**].";
    let ann = "T1\tDrug 27 34\taspirin\nT2\tStrength 35 40\t81 mg\nT3\tDrug 53 61\twarfarin\n";
    let doc = parse_standoff("note", text, ann)?;
    let spec = SyntheticValueSpec::new(0);
    for s in segment_sentences(&doc, &SegmenterConfig::default())? {
        let filled = synthesize_placeholders(&s, &spec.for_sentence(&s.doc_id, s.doc_offset))?;
        println!("{}", filled.text);
        for span in &filled.spans {
            let surface: String = filled
                .text
                .chars()
                .skip(span.char_start)
                .take(span.len())
                .collect();
            println!("  {} {:?}", span.label, surface);
        }
    }
    Ok(())
}
