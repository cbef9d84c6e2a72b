//! Summarizes a recorded cassette: exchanges and tokens per purpose and level.
//!
//! ```text
//! cargo run --example replay_cassette -- crates/core/cassettes/trap_maze.full.jsonl
//! ```

use std::path::PathBuf;

use tbrl::llm::{usage_total, Cassette};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cassettes/navigation.full.jsonl"));
    let cassette = Cassette::load(&path)?;
    let summary = usage_total(&cassette.exchanges);
    println!(
        "{}: {} exchanges, {} tokens",
        path.display(),
        summary.exchanges,
        summary.total.total()
    );
    for (level, purposes) in &summary.by_level {
        for (purpose, usage) in purposes {
            println!("  {level:<24} {:<24} {:>6}", purpose.as_str(), usage.total());
        }
    }
    if let Some(meta) = &cassette.meta {
        println!("recorded with {}", meta.model);
    }
    Ok(())
}
