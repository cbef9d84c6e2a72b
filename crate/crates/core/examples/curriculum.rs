//! Replays the navigation curriculum in every mode and compares the token
//! spend per purpose.
//!
//! ```text
//! cargo run --example curriculum
//! ```

use std::path::Path;

use tbrl::agent::RunMode;
use tbrl::harness::{build_client, emit_report, run_curriculum, CurriculumConfig, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/navigation.toml");
    for mode in [RunMode::Full, RunMode::NoCurriculum, RunMode::Flat] {
        let mut config = CurriculumConfig::load(&path)?;
        config.mode = mode;
        let mut client = build_client(&config)?;
        let report = run_curriculum(&config, &mut client)?;
        print!("{}", emit_report(&report, ReportFormat::Table, false));
        println!();
    }
    Ok(())
}
