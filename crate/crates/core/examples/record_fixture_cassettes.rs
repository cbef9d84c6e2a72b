//! Regenerates the shipped cassettes from the scripted responder.
//!
//! ```text
//! cargo run --example record_fixture_cassettes
//! ```

use std::path::Path;

use tbrl::agent::RunMode;
use tbrl::harness::{emit_report, fixtures, run_curriculum, CurriculumConfig, ReportFormat};
use tbrl::llm::{CassetteWriter, LlmClient};

const RUNS: [(&str, &[RunMode]); 4] = [
    ("navigation", &[RunMode::Full, RunMode::NoCurriculum, RunMode::Flat]),
    ("trap_maze", &[RunMode::Full]),
    ("minihack", &[RunMode::Full]),
    ("babyai", &[RunMode::Full]),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    for (name, modes) in RUNS {
        for &mode in modes {
            let mut config = CurriculumConfig::load(&root.join("configs").join(format!("{name}.toml")))?;
            config.mode = mode;
            let out = config.cassette_path().ok_or("config has no replay cassette")?;
            let mut client = LlmClient::live(Box::new(fixtures::fixture_backend()), config.llm.clone())
                .recording(CassetteWriter::create(&out)?);
            let report = run_curriculum(&config, &mut client)?;
            println!("wrote {}", out.display());
            print!("{}", emit_report(&report, ReportFormat::Table, false));
        }
    }
    Ok(())
}
