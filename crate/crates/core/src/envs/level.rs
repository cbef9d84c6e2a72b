use std::path::Path;

use crate::state::{Action, RawState};

use super::{EnvError, EnvironmentSpec, Family, Generator};

const DEFAULT_KILL_RANGE: i64 = 5;

/// Named descriptions a level may select with `@description: <name>`.
fn named_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "maze_and_labyrinth" => include_str!("../../prompts/domains/maze_and_labyrinth.txt"),
        "sokoban" => include_str!("../../prompts/domains/sokoban.txt"),
        "babyai" => include_str!("../../prompts/domains/babyai.txt"),
        "minihack" => include_str!("../../prompts/domains/minihack.txt"),
        "minihack_wod" => include_str!("../../prompts/domains/minihack_wod.txt"),
        _ => return None,
    })
}

/// Parses a level file: `@key: value` header lines followed by a state in
/// the interchange text format.
///
/// Header keys: `family` (required), `name`, `width`, `height`,
/// `actions` (comma separated), `win`, `mission`, `description`,
/// `generator`, `kill_range`.
pub fn parse_level(text: &str) -> Result<EnvironmentSpec, EnvError> {
    let mut header = std::collections::BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('@') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| EnvError::InvalidLevel(format!("malformed header line `{line}`")))?;
            if header.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(EnvError::InvalidLevel(format!("duplicate header `{}`", k.trim())));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let take = |k: &str| header.get(k).cloned();
    let family: Family = take("family")
        .ok_or_else(|| EnvError::InvalidLevel("missing `@family`".into()))?
        .parse()?;
    let initial = RawState::deserialize(&body).map_err(|e| EnvError::InvalidLevel(e.to_string()))?;
    let int = |k: &str| -> Result<Option<i64>, EnvError> {
        take(k)
            .map(|v| {
                v.parse::<i64>()
                    .map_err(|_| EnvError::InvalidLevel(format!("`@{k}` must be an integer")))
            })
            .transpose()
    };
    // default bounds: tight box around the layout
    let extent = |f: fn(&crate::state::Pos) -> i64| {
        initial
            .iter()
            .flat_map(|(_, v)| v.positions().iter().map(f).collect::<Vec<_>>())
            .max()
            .map_or(0, |m| m + 1)
    };
    let width = int("width")?.unwrap_or_else(|| extent(|p| p.x));
    let height = int("height")?.unwrap_or_else(|| extent(|p| p.y));
    let actions = match take("actions") {
        Some(list) => list.split(',').map(|a| Action::new(a.trim())).collect(),
        None => family.default_actions(),
    };
    let win = match take("win") {
        Some(w) => w.parse()?,
        None => family.default_win(),
    };
    let description = match take("description") {
        Some(d) => named_description(&d).map(str::to_string).unwrap_or(d),
        None => family.description().to_string(),
    };
    let generator = match take("generator").as_deref() {
        None => None,
        Some("boss") => Some(Generator::Boss),
        Some(other) => return Err(EnvError::InvalidLevel(format!("unknown generator `{other}`"))),
    };
    let known = [
        "family",
        "name",
        "width",
        "height",
        "actions",
        "win",
        "mission",
        "description",
        "generator",
        "kill_range",
    ];
    if let Some(k) = header.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(EnvError::InvalidLevel(format!("unknown header `@{k}`")));
    }
    let spec = EnvironmentSpec {
        family,
        name: take("name").unwrap_or_else(|| "unnamed".into()),
        width,
        height,
        actions,
        win,
        mission: take("mission"),
        description,
        initial,
        generator,
        kill_range: int("kill_range")?.unwrap_or(DEFAULT_KILL_RANGE),
    };
    if spec.generator.is_none() {
        spec.validate_layout(&spec.initial)?;
    }
    Ok(spec)
}

pub fn load_level(path: &Path) -> Result<EnvironmentSpec, EnvError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EnvError::InvalidLevel(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = parse_level(&text)?;
    if spec.name == "unnamed" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            spec.name = stem.to_string();
        }
    }
    Ok(spec)
}
