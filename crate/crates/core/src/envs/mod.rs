//! Deterministic grid environments: Labyrinth, Maze, Sokoban, BabyAI and
//! Minihack (navigation and wand-of-death levels).
//!
//! Coordinates follow screen convention: x grows rightward, y grows
//! downward, so `up` is `[0, -1]`. Dying removes the agent object from the
//! state, which is how a loss shows up in observations.

mod dynamics;
mod generate;
mod level;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{Action, RawState};

pub use dynamics::true_transition;
pub use generate::boss_level;
pub use level::{load_level, parse_level};
pub use oracle::{oracle_solve, DEFAULT_ORACLE_NODES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("environment already terminated")]
    SteppedAfterTermination,
    #[error("no winning action sequence exists")]
    OracleUnsolvable,
    #[error("oracle search exceeded {0} nodes")]
    OracleBudget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Labyrinth,
    Maze,
    Sokoban,
    Babyai,
    Minihack,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Labyrinth,
        Family::Maze,
        Family::Sokoban,
        Family::Babyai,
        Family::Minihack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Labyrinth => "labyrinth",
            Family::Maze => "maze",
            Family::Sokoban => "sokoban",
            Family::Babyai => "babyai",
            Family::Minihack => "minihack",
        }
    }

    /// Name of the controllable object.
    pub fn agent_key(self) -> &'static str {
        match self {
            Family::Labyrinth | Family::Maze | Family::Sokoban => "avatar",
            Family::Babyai => "red_agent",
            Family::Minihack => "agent",
        }
    }

    pub fn default_actions(self) -> Vec<Action> {
        let names: &[&str] = match self {
            Family::Babyai => &["left", "right", "forward", "pickup", "drop", "toggle"],
            _ => &["up", "down", "left", "right"],
        };
        names.iter().map(|n| Action::new(*n)).collect()
    }

    pub fn default_win(self) -> WinCondition {
        match self {
            Family::Labyrinth | Family::Maze => WinCondition::Reach("goal".into()),
            Family::Sokoban => WinCondition::Cleared("box".into()),
            Family::Babyai => WinCondition::Exists("goal".into()),
            Family::Minihack => WinCondition::Reach("downstairs".into()),
        }
    }

    /// Natural-language description handed to the language model.
    pub fn description(self) -> &'static str {
        match self {
            Family::Labyrinth | Family::Maze => include_str!("../../prompts/domains/maze_and_labyrinth.txt"),
            Family::Sokoban => include_str!("../../prompts/domains/sokoban.txt"),
            Family::Babyai => include_str!("../../prompts/domains/babyai.txt"),
            Family::Minihack => include_str!("../../prompts/domains/minihack.txt"),
        }
    }

    /// Hand-written world-model program reproducing the true dynamics on
    /// wall-enclosed levels. Used as a test oracle and in fixture cassettes.
    pub fn reference_model(self) -> &'static str {
        match self {
            Family::Labyrinth | Family::Maze => include_str!("../../models/maze.wmdsl"),
            Family::Sokoban => include_str!("../../models/sokoban.wmdsl"),
            Family::Babyai => include_str!("../../models/babyai.wmdsl"),
            Family::Minihack => include_str!("../../models/minihack.wmdsl"),
        }
    }

    /// True when `key` belongs to the family's observation vocabulary.
    pub fn in_vocabulary(self, key: &str) -> bool {
        let exact: &[&str] = match self {
            Family::Labyrinth | Family::Maze => &["avatar", "goal", "wall", "trap"],
            Family::Sokoban => &["avatar", "box", "hole", "wall"],
            Family::Babyai => &["red_agent", "agent_direction", "agent_carrying", "grey_wall", "goal"],
            Family::Minihack => &[
                "agent",
                "downstairs",
                "wall",
                "trap",
                "monster",
                "minotaur",
                "dead_minotaur",
                "wand",
                "agent_carrying",
                "zap_stage",
            ],
        };
        if exact.contains(&key) {
            return true;
        }
        self == Family::Babyai && babyai_object(key).is_some()
    }
}

pub const COLORS: &[&str] = &["red", "green", "blue", "purple", "yellow", "grey"];

/// Parsed BabyAI object key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BabyaiObject<'a> {
    Key { color: &'a str },
    Door { state: &'a str, color: &'a str },
}

/// Recognises `<color>_key` and `<locked|closed|open>_<color>_door`.
pub fn babyai_object(key: &str) -> Option<BabyaiObject<'_>> {
    if let Some(color) = key.strip_suffix("_key") {
        return COLORS.contains(&color).then_some(BabyaiObject::Key { color });
    }
    let body = key.strip_suffix("_door")?;
    let (state, color) = body.split_once('_')?;
    (matches!(state, "locked" | "closed" | "open") && COLORS.contains(&color))
        .then_some(BabyaiObject::Door { state, color })
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| EnvError::InvalidLevel(format!("unknown family `{s}`")))
    }
}

/// Goal test evaluated on the raw state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WinCondition {
    /// The agent shares a cell with an object of this key.
    Reach(String),
    /// The key is absent or empty.
    Cleared(String),
    /// The key is present and non-empty.
    Exists(String),
    /// `agent_carrying` contains this name.
    Carrying(String),
}

impl WinCondition {
    pub fn holds(&self, family: Family, s: &RawState) -> bool {
        let agent = s.positions(family.agent_key());
        match self {
            WinCondition::Reach(k) => agent.first().is_some_and(|a| s.positions(k).contains(a)),
            WinCondition::Cleared(k) => s.get(k).is_none_or(|v| v.is_empty_list()),
            WinCondition::Exists(k) => s.get(k).is_some_and(|v| !v.is_empty_list()),
            WinCondition::Carrying(item) => s.names("agent_carrying").iter().any(|n| n == item),
        }
    }
}

impl fmt::Display for WinCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WinCondition::Reach(k) => write!(f, "reach {k}"),
            WinCondition::Cleared(k) => write!(f, "cleared {k}"),
            WinCondition::Exists(k) => write!(f, "exists {k}"),
            WinCondition::Carrying(k) => write!(f, "carrying {k}"),
        }
    }
}

impl FromStr for WinCondition {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s
            .trim()
            .split_once(' ')
            .ok_or_else(|| EnvError::InvalidLevel(format!("bad win condition `{s}`")))?;
        let arg = arg.trim().to_string();
        Ok(match kind {
            "reach" => WinCondition::Reach(arg),
            "cleared" => WinCondition::Cleared(arg),
            "exists" => WinCondition::Exists(arg),
            "carrying" => WinCondition::Carrying(arg),
            _ => return Err(EnvError::InvalidLevel(format!("bad win condition `{s}`"))),
        })
    }
}

/// Seeded layout generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// Two rooms joined by a locked blue door; fetch the yellow key.
    Boss,
}

/// A level: family, layout and goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvironmentSpec {
    pub family: Family,
    pub name: String,
    pub width: i64,
    pub height: i64,
    pub actions: Vec<Action>,
    pub win: WinCondition,
    pub mission: Option<String>,
    pub description: String,
    pub initial: RawState,
    pub generator: Option<Generator>,
    /// Reach of the wand in Minihack wand-of-death levels.
    pub kill_range: i64,
}

impl EnvironmentSpec {
    pub fn agent_key(&self) -> &'static str {
        self.family.agent_key()
    }

    /// The action space, in a fixed order.
    pub fn action_space(&self) -> &[Action] {
        &self.actions
    }

    /// Stable identifier `family/name`.
    pub fn id(&self) -> String {
        format!("{}/{}", self.family, self.name)
    }

    pub fn is_won(&self, s: &RawState) -> bool {
        !self.is_lost(s) && self.win.holds(self.family, s)
    }

    pub fn is_lost(&self, s: &RawState) -> bool {
        s.positions(self.agent_key()).is_empty()
    }

    /// Checks bounds and the single-agent rule on a concrete layout.
    pub fn validate_layout(&self, s: &RawState) -> Result<(), EnvError> {
        let agents = s.positions(self.agent_key());
        if agents.len() != 1 {
            return Err(EnvError::InvalidLevel(format!(
                "expected exactly one `{}`, found {}",
                self.agent_key(),
                agents.len()
            )));
        }
        for (k, v) in s.iter() {
            for p in v.positions() {
                if p.x < 0 || p.y < 0 || p.x >= self.width || p.y >= self.height {
                    return Err(EnvError::InvalidLevel(format!(
                        "`{k}` at {p} lies outside {}x{}",
                        self.width, self.height
                    )));
                }
            }
            if !self.family.in_vocabulary(k) {
                return Err(EnvError::InvalidLevel(format!(
                    "`{k}` is not part of the {} vocabulary",
                    self.family
                )));
            }
        }
        if self.family == Family::Babyai && s.scalar("agent_direction").is_none() {
            return Err(EnvError::InvalidLevel("babyai levels need `agent_direction`".into()));
        }
        Ok(())
    }
}

/// Observation plus termination flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub raw: RawState,
    pub won: bool,
    pub lost: bool,
    pub steps: u64,
}

impl EnvState {
    pub fn terminated(&self) -> bool {
        self.won || self.lost
    }
}

pub fn reset(spec: &EnvironmentSpec, seed: u64) -> Result<EnvState, EnvError> {
    let raw = match spec.generator {
        Some(Generator::Boss) => boss_level(spec.width, spec.height, seed),
        None => spec.initial.clone(),
    };
    spec.validate_layout(&raw)?;
    Ok(EnvState {
        won: spec.is_won(&raw),
        lost: false,
        raw,
        steps: 0,
    })
}

pub fn step(spec: &EnvironmentSpec, state: &EnvState, action: &Action) -> Result<EnvState, EnvError> {
    if !spec.actions.contains(action) {
        return Err(EnvError::UnknownAction(action.to_string()));
    }
    if state.terminated() {
        return Err(EnvError::SteppedAfterTermination);
    }
    let raw = true_transition(spec, &state.raw, action);
    let lost = spec.is_lost(&raw);
    Ok(EnvState {
        won: !lost && spec.win.holds(spec.family, &raw),
        lost,
        raw,
        steps: state.steps + 1,
    })
}

/// A live episode: spec plus current state.
#[derive(Debug, Clone)]
pub struct Environment {
    pub spec: EnvironmentSpec,
    pub seed: u64,
    state: EnvState,
}

impl Environment {
    pub fn new(spec: EnvironmentSpec, seed: u64) -> Result<Self, EnvError> {
        let state = reset(&spec, seed)?;
        Ok(Environment { spec, seed, state })
    }

    pub fn reset(&mut self) -> &EnvState {
        self.state = reset(&self.spec, self.seed).expect("spec validated at construction");
        &self.state
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn step(&mut self, action: &Action) -> Result<&EnvState, EnvError> {
        self.state = step(&self.spec, &self.state, action)?;
        Ok(&self.state)
    }
}

/// ASCII picture of a state, for logs and debugging.
pub fn ascii(spec: &EnvironmentSpec, s: &RawState) -> String {
    let mut grid = vec![vec!['.'; spec.width.max(0) as usize]; spec.height.max(0) as usize];
    // later entries win, so draw the agent last
    let mut keys: Vec<&str> = s.keys().collect();
    keys.sort_by_key(|k| (*k == spec.agent_key(), *k));
    for k in keys {
        let ch = glyph(spec, s, k);
        for p in s.positions(k) {
            if let Some(cell) = grid.get_mut(p.y as usize).and_then(|r| r.get_mut(p.x as usize)) {
                *cell = ch;
            }
        }
    }
    let mut out: String = grid
        .into_iter()
        .map(|r| r.into_iter().collect::<String>() + "\n")
        .collect();
    if let Some(c) = s.get("agent_carrying") {
        out.push_str(&format!("carrying: {c}\n"));
    }
    out
}

fn glyph(spec: &EnvironmentSpec, s: &RawState, key: &str) -> char {
    if key == spec.agent_key() {
        return match s.scalar("agent_direction").map(|d| (d.x, d.y)) {
            Some((1, 0)) => '>',
            Some((-1, 0)) => '<',
            Some((0, -1)) => '^',
            Some((0, 1)) => 'v',
            _ => '@',
        };
    }
    match key {
        "wall" | "grey_wall" => '#',
        "goal" => 'G',
        "trap" => 'T',
        "box" => 'B',
        "hole" => 'O',
        "downstairs" => '>',
        "monster" => 'M',
        "minotaur" => 'H',
        "dead_minotaur" => 'x',
        "wand" => '/',
        _ => match babyai_object(key) {
            Some(BabyaiObject::Key { .. }) => 'k',
            Some(BabyaiObject::Door { state: "open", .. }) => '_',
            Some(BabyaiObject::Door { .. }) => 'D',
            None => key.chars().next().unwrap_or('?'),
        },
    }
}
