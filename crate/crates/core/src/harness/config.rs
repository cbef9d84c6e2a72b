use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::{AgentConfig, Budgets, RunMode};
use crate::envs::{load_level, EnvironmentSpec};
use crate::llm::LlmConfig;
use crate::wmdsl::Limits;

/// The only configuration format version understood.
pub const CONFIG_VERSION: u32 = 1;

/// One level to play, relative to the config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRef {
    pub path: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub levels: Vec<LevelRef>,
}

/// Where completions come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClientConfig {
    /// Replays a cassette. `{mode}` in the path is replaced by the run mode,
    /// so one config can point at a cassette per mode.
    Replay { cassette: String },
    /// Calls the chat-completions service named by `TBRL_LLM_ENDPOINT`,
    /// optionally recording a cassette.
    Live {
        #[serde(default)]
        record: Option<String>,
    },
}

/// A curriculum file:
///
/// ```toml
/// version = 1
/// name = "navigation"
/// mode = "full"          # full | no-curriculum | flat
/// seed = 0
/// library = "library/navigation"   # optional, where the library is saved
///
/// [client]
/// kind = "replay"
/// cassette = "cassettes/navigation.{mode}.jsonl"
///
/// [budgets]              # optional, any subset
/// revisions = 5
///
/// [[episodes]]
/// levels = [{ path = "levels/labyrinth/labyrinth_1.lvl", seed = 0 }]
/// ```
///
/// Relative paths resolve against the directory holding the file. Unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub library: Option<PathBuf>,
    #[serde(default)]
    pub client: Option<ClientConfig>,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub limits: Limits,
    pub episodes: Vec<EpisodeConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CurriculumConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut config: CurriculumConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.base_dir = base_dir.to_path_buf();
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// A one-level configuration, for the `solve` verb.
    pub fn single(level: &Path, seed: u64, mode: RunMode) -> Self {
        CurriculumConfig {
            version: CONFIG_VERSION,
            name: level
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("level")
                .to_string(),
            mode,
            seed: 0,
            library: None,
            client: None,
            llm: LlmConfig::default(),
            budgets: Budgets::default(),
            limits: Limits::default(),
            episodes: vec![EpisodeConfig {
                levels: vec![LevelRef {
                    path: level.to_path_buf(),
                    seed,
                }],
            }],
            base_dir: PathBuf::from("."),
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.episodes.is_empty() {
            return Err(HarnessError::Config("no episodes".into()));
        }
        if let Some(e) = self.episodes.iter().position(|e| e.levels.is_empty()) {
            return Err(HarnessError::Config(format!("episode {e} has no levels")));
        }
        self.load_levels().map(|_| ())
    }

    pub fn resolve(&self, p: impl AsRef<Path>) -> PathBuf {
        let p = p.as_ref();
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every level, in run order, with its episode index and seed.
    pub fn load_levels(&self) -> Result<Vec<(usize, EnvironmentSpec, u64)>, HarnessError> {
        let mut out = Vec::new();
        for (i, episode) in self.episodes.iter().enumerate() {
            for l in &episode.levels {
                let path = self.resolve(&l.path);
                let spec = load_level(&path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                out.push((i, spec, l.seed));
            }
        }
        Ok(out)
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            mode: self.mode,
            budgets: self.budgets,
            limits: self.limits,
            seed: self.seed,
        }
    }

    /// Cassette path for replay with `{mode}` expanded.
    pub fn cassette_path(&self) -> Option<PathBuf> {
        match &self.client {
            Some(ClientConfig::Replay { cassette }) => {
                Some(self.resolve(cassette.replace("{mode}", self.mode.as_str())))
            }
            _ => None,
        }
    }
}

/// The same curriculum with its episodes in a seeded random order.
pub fn shuffle_ablation(config: &CurriculumConfig, seed: u64) -> Result<CurriculumConfig, HarnessError> {
    if config.episodes.len() < 2 {
        return Err(HarnessError::Precondition(format!(
            "shuffling needs at least two episodes, found {}",
            config.episodes.len()
        )));
    }
    let mut out = config.clone();
    out.episodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out.name = format!("{}-shuffled-{seed}", config.name);
    Ok(out)
}
