//! Solves one level with the scripted responder standing in for the
//! language model, and prints what the agent learned.
//!
//! ```text
//! cargo run --example solve_level -- crates/core/levels/minihack/wod_1.lvl
//! ```

use std::path::PathBuf;

use tbrl::agent::{solve_level, AbstractionLibrary, AgentConfig};
use tbrl::envs::load_level;
use tbrl::harness::fixtures::fixture_backend;
use tbrl::llm::{LlmClient, LlmConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("levels/maze/trap_maze.lvl"));
    let spec = load_level(&path)?;
    let mut client = LlmClient::live(Box::new(fixture_backend()), LlmConfig::default());
    let mut library = AbstractionLibrary::default();
    let result = solve_level(&spec, 0, &mut library, &mut client, &AgentConfig::default(), 0);

    println!(
        "{}: solved={} first_plan={} revisions={}",
        result.level, result.solved, result.first_plan_success, result.revisions
    );
    println!("operators: {}", result.high_level_plan.join(" -> "));
    println!("actions:   {}", result.plan.join(" "));
    print!("{}", library.domain_text());
    if let Some(model) = library.world_models.get(spec.family.as_str()) {
        println!("\nworld model:\n{}", model.source());
    }
    Ok(())
}
