//! Run every stage on the bundled toy corpus.
//!
//! cargo run --release --example pipeline -- [output-dir]

use std::path::{Path, PathBuf};

use projner::config::PipelineConfig;
use projner::pipeline::run_pipeline;

fn main() -> projner::Result<()> {
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.conf");
    let mut config = PipelineConfig::load(&conf)?;
    config.paths.output_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("projner-toy"));
    let summary = run_pipeline(&config)?;
    println!(
        "{} documents, {} sentences, {} spans projected, {} dropped",
        summary.documents,
        summary.sentences,
        summary.projection.total.projected,
        summary.projection.total.dropped
    );
    if let Some(e) = &summary.evaluation {
        print!("{}", e.to_table());
    }
    if let Some(e) = &summary.external_evaluation {
        println!("external gold:");
        print!("{}", e.to_table());
    }
    println!("outputs in {}", config.paths.output_dir.display());
    Ok(())
}
