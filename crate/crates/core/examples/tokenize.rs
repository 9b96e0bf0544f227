//! Whitespace and punctuation tokenization with character offsets.
//!
//! cargo run --example tokenize -- "Nimm 2 Tbl. (500 mg) täglich."

use projner::tokenizer::tokenize;

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "Nimm 2 Tbl. (500 mg) täglich.".to_string());
    for t in tokenize(&text).tokens {
        println!("{:>3}..{:<3} {}", t.char_start, t.char_end, t.surface);
    }
}
