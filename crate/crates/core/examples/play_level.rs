//! Loads a level, draws it and plays the oracle's shortest solution.
//!
//! ```text
//! cargo run --example play_level -- crates/core/levels/sokoban/sokoban_1.lvl
//! ```

use std::path::PathBuf;

use tbrl::envs::{ascii, load_level, oracle_solve, Environment, DEFAULT_ORACLE_NODES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("levels/maze/trap_maze.lvl"));
    let spec = load_level(&path)?;
    let solution = oracle_solve(&spec, 0, DEFAULT_ORACLE_NODES)?;
    let mut env = Environment::new(spec.clone(), 0)?;
    println!("{}\n{}", spec.id(), ascii(&spec, &env.state().raw));
    for a in &solution {
        env.step(a)?;
    }
    let names: Vec<&str> = solution.iter().map(|a| a.as_str()).collect();
    println!("{} steps: {}", names.len(), names.join(" "));
    println!("{}\nwon: {}", ascii(&spec, &env.state().raw), env.state().won);
    Ok(())
}
