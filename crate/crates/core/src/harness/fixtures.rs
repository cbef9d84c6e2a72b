//! Deterministic stand-in for the language model, used to record the
//! shipped cassettes and to drive tests without a network.
//!
//! The responder recognizes which prompt it is answering from the template
//! text and which game it is playing from the domain description, then
//! returns a canned answer in the requested format. For a maze that
//! contains traps its first world model ignores them, so the agent has to
//! learn about traps from a failed plan.

use crate::envs::Family;
use crate::llm::{ChatRequest, ResponderBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    GeneratePddl,
    Transfer,
    Predicates,
    WorldModel,
    Revision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Game {
    Maze,
    Sokoban,
    Babyai,
    MinihackNav,
    MinihackWod,
}

pub fn prompt_kind(prompt: &str) -> Option<PromptKind> {
    const MARKERS: [(&str, PromptKind); 5] = [
        ("must fix the transition model", PromptKind::Revision),
        ("come up with a transition model", PromptKind::WorldModel),
        ("must write python predicates", PromptKind::Predicates),
        ("PDDL problem file for this given PDDL domain", PromptKind::Transfer),
        ("minimal PDDL domain and problem file", PromptKind::GeneratePddl),
    ];
    MARKERS.iter().find(|(m, _)| prompt.contains(m)).map(|(_, k)| *k)
}

pub fn game(prompt: &str) -> Option<Game> {
    const MARKERS: [(&str, Game); 5] = [
        ("Kill the minotaur", Game::MinihackWod),
        ("downstair case", Game::MinihackNav),
        ("push the boxes into the holes", Game::Sokoban),
        ("navigate the maze to win", Game::Babyai),
        ("control the avatar and need to reach the goal", Game::Maze),
    ];
    MARKERS.iter().find(|(m, _)| prompt.contains(m)).map(|(_, g)| *g)
}

const MOVE_DOMAIN: &str = "\
(define (domain game)
  (:requirements :strips :typing)
  (:types object)
  (:predicates
    (ontop ?obj1 - object ?obj2 - object)
  )
  (:action moveontop
    :parameters (?obj1 - object ?obj2 - object)
    :precondition (not (ontop ?obj1 ?obj2))
    :effect (ontop ?obj1 ?obj2)
  )
)";

const BABYAI_DOMAIN: &str = "\
(define (domain babyai)
  (:requirements :strips :typing)
  (:types agent key door - object)
  (:predicates
    (holding ?agent - agent ?item - key)
    (unlocked ?door - door)
  )
  (:action pickup
    :parameters (?agent - agent ?item - key)
    :precondition (not (holding ?agent ?item))
    :effect (holding ?agent ?item)
  )
  (:action unlock
    :parameters (?agent - agent ?door - door ?key - key)
    :precondition (and (holding ?agent ?key) (not (unlocked ?door)))
    :effect (unlocked ?door)
  )
)";

const WOD_DOMAIN: &str = "\
(define (domain wod)
  (:requirements :strips :typing)
  (:types player creature weapon - object)
  (:predicates
    (holding ?a - player ?w - weapon)
    (dead ?m - creature)
  )
  (:action pickup
    :parameters (?a - player ?w - weapon)
    :precondition (not (holding ?a ?w))
    :effect (holding ?a ?w)
  )
  (:action attack
    :parameters (?a - player ?m - creature ?w - weapon)
    :precondition (and (holding ?a ?w) (not (dead ?m)))
    :effect (dead ?m)
  )
)";

fn problem(game: Game) -> &'static str {
    match game {
        Game::Maze => {
            "(define (problem reach)
  (:domain game)
  (:objects avatar goal - object)
  (:init)
  (:goal (ontop avatar goal))
)"
        }
        Game::Sokoban => {
            "(define (problem fill)
  (:domain game)
  (:objects box hole - object)
  (:init)
  ; every box ends up in a hole
  (:goal (ontop box hole))
)"
        }
        Game::MinihackNav => {
            "(define (problem descend)
  (:domain game)
  (:objects agent downstairs - object)
  (:init)
  (:goal (ontop agent downstairs))
)"
        }
        Game::Babyai => {
            "(define (problem open)
  (:domain babyai)
  (:objects red_agent - agent blue_key - key blue_door - door)
  (:init)
  (:goal (unlocked blue_door))
)"
        }
        Game::MinihackWod => {
            "(define (problem slay)
  (:domain wod)
  (:objects agent - player minotaur - creature wand - weapon)
  (:init)
  (:goal (dead minotaur))
)"
        }
    }
}

fn domain(game: Game) -> &'static str {
    match game {
        Game::Maze | Game::Sokoban | Game::MinihackNav => MOVE_DOMAIN,
        Game::Babyai => BABYAI_DOMAIN,
        Game::MinihackWod => WOD_DOMAIN,
    }
}

fn classifiers(game: Game) -> &'static str {
    match game {
        Game::Maze | Game::MinihackNav => {
            "def ontop(state, obj1, obj2):
    pos1 = state.get(obj1)
    pos2 = state.get(obj2)
    if pos1 is None or pos2 is None:
        return False
    return any([p in pos2 for p in pos1])
"
        }
        Game::Sokoban => {
            "def ontop(state, obj1, obj2):
    # boxes vanish into holes, so this holds once no box is left outside one
    holes = state.get(obj2)
    if holes is None:
        return False
    return all([p in holes for p in state.get(obj1, [])])
"
        }
        Game::Babyai => {
            "def holding(state, agent, item):
    if agent not in state:
        return False
    return item in state.get('agent_carrying', [])

def unlocked(state, door):
    return len(state.get('open_' + door, [])) > 0
"
        }
        Game::MinihackWod => {
            "def holding(state, a, w):
    if a not in state:
        return False
    return w in state.get('agent_carrying', [])

def dead(state, m):
    return len(state.get('dead_' + m, [])) > 0
"
        }
    }
}

/// Maze dynamics without traps: walking into one is predicted to be a move.
pub const TRAP_IGNORANT_MAZE: &str = "\
from utils import directions

def transition_model(state, action):
    new_state = state.copy()
    avatar = pos(state, 'avatar')
    if avatar is None or action not in directions:
        return new_state
    target = add(avatar, directions[action])
    if target in state.get('wall', []):
        return new_state
    new_state['avatar'] = [target]
    return new_state
";

fn world_model(game: Game) -> &'static str {
    match game {
        Game::Maze => Family::Maze.reference_model(),
        Game::Sokoban => Family::Sokoban.reference_model(),
        Game::Babyai => Family::Babyai.reference_model(),
        Game::MinihackNav | Game::MinihackWod => Family::Minihack.reference_model(),
    }
}

fn fenced(intro: &str, tag: &str, body: &str) -> String {
    format!("{intro}\n\n```{tag}\n{}\n```\n", body.trim_end())
}

/// Canned answer for `prompt`.
pub fn respond(prompt: &str) -> String {
    let (Some(kind), Some(game)) = (prompt_kind(prompt), game(prompt)) else {
        return "I am not sure what is being asked.".into();
    };
    match kind {
        PromptKind::GeneratePddl => fenced(
            "Here is a minimal domain and problem.",
            "pddl",
            &format!("{}\n\n{}", domain(game), problem(game)),
        ),
        PromptKind::Transfer => fenced("Here is the problem file.", "pddl", problem(game)),
        PromptKind::Predicates => fenced("Here are the predicates.", "wmdsl", classifiers(game)),
        PromptKind::WorldModel => {
            let model = if game == Game::Maze && prompt.contains("\ntrap: ") {
                TRAP_IGNORANT_MAZE
            } else {
                world_model(game)
            };
            fenced("Here is the transition model.", "wmdsl", model)
        }
        PromptKind::Revision => fenced("Here is the corrected model.", "wmdsl", world_model(game)),
    }
}

/// A backend answering every request with [`respond`].
pub fn fixture_backend() -> ResponderBackend<impl FnMut(&ChatRequest) -> String> {
    ResponderBackend::new(|req: &ChatRequest| respond(&req.prompt_text()))
}
