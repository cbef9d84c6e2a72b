//! Curriculum runs: configuration, client setup, the episode loop with
//! library threading, and reporting.

mod config;
pub mod fixtures;
mod report;

use thiserror::Error;

use crate::agent::{solve_level, AbstractionLibrary, AgentError};
use crate::llm::{Cassette, CassetteWriter, HttpBackend, LlmClient, LlmError};

pub use config::{shuffle_ablation, ClientConfig, CurriculumConfig, EpisodeConfig, LevelRef, CONFIG_VERSION};
pub use report::{emit_report, ReportFormat, RunReport, Totals};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("llm client: {0}")]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("io: {0}")]
    Io(String),
}

/// The client a config asks for: replay of its cassette, or the live
/// service (recording if configured).
pub fn build_client(config: &CurriculumConfig) -> Result<LlmClient, HarnessError> {
    match &config.client {
        Some(ClientConfig::Replay { .. }) => {
            let path = config.cassette_path().expect("replay config has a cassette");
            Ok(LlmClient::replay(Cassette::load(&path)?, config.llm.clone()))
        }
        Some(ClientConfig::Live { record }) => {
            let client = LlmClient::live(
                Box::new(HttpBackend::from_env().map_err(|e| HarnessError::Config(e.to_string()))?),
                config.llm.clone(),
            );
            match record {
                Some(p) => {
                    let path = config.resolve(p.replace("{mode}", config.mode.as_str()));
                    Ok(client.recording(CassetteWriter::create(&path)?))
                }
                None => Ok(client),
            }
        }
        None => Err(HarnessError::Config(
            "no client configured; add a [client] table or pass --cassette".into(),
        )),
    }
}

/// Plays every level in order. In full and flat modes the abstraction
/// library is carried from one level to the next; in no-curriculum mode
/// each level starts blank. Level failures are recorded in the report and
/// the run continues. The library is saved if the config names a place.
pub fn run_curriculum(config: &CurriculumConfig, client: &mut LlmClient) -> Result<RunReport, HarnessError> {
    let levels = config.load_levels()?;
    let agent = config.agent_config();
    let mut library = AbstractionLibrary::default();
    let mut rows = Vec::with_capacity(levels.len());
    for (episode, spec, seed) in &levels {
        tracing::info!(episode, level = %spec.id(), seed, mode = %config.mode, "level start");
        let result = solve_level(spec, *seed, &mut library, client, &agent, *episode);
        tracing::info!(level = %result.level, solved = result.solved, tokens = result.total_tokens().total(), "level end");
        rows.push(result);
    }
    client.finish()?;
    if let Some(dir) = &config.library {
        library.save(&config.resolve(dir))?;
    }
    Ok(RunReport::new(config.name.clone(), config.mode, rows))
}

#[cfg(test)]
mod tests;
