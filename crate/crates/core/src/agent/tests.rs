use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::envs::{load_level, parse_level, Environment, EnvironmentSpec, Family};
use crate::harness::fixtures::{self, TRAP_IGNORANT_MAZE};
use crate::llm::{LlmClient, LlmConfig, Purpose, ResponderBackend, ScriptedBackend};
use crate::pddl::{ground, parse_domain, parse_problem, GroundedOperator};
use crate::state::{Action, RawState, Transition};
use crate::wmdsl::{run_transition, Limits, PredicateProgram, TransitionProgram};

const ONTOP: &str = "\
def ontop(state, obj1, obj2):
    pos1 = state.get(obj1)
    pos2 = state.get(obj2)
    if pos1 is None or pos2 is None:
        return False
    return any([p in pos2 for p in pos1])
";

const MOVE_DOMAIN: &str = "(define (domain game) (:requirements :strips)
  (:predicates (ontop ?a ?b))
  (:action moveontop :parameters (?a ?b) :precondition (not (ontop ?a ?b)) :effect (ontop ?a ?b)))";

const REACH_PROBLEM: &str = "(define (problem reach) (:domain game) (:objects avatar goal) (:init)
  (:goal (ontop avatar goal)))";

/// Avatar two cells left of the goal in an open corridor.
const CORRIDOR: &str = "\
@family: maze
@name: corridor
avatar: [[1,1]]
goal: [[3,1]]
wall: [[0,0],[1,0],[2,0],[3,0],[4,0],[0,1],[4,1],[0,2],[1,2],[2,2],[3,2],[4,2]]
";

/// The goal is sealed off from the avatar.
const SEALED: &str = "\
@family: maze
@name: sealed
avatar: [[1,1]]
goal: [[3,1]]
wall: [[0,0],[1,0],[2,0],[3,0],[4,0],[0,1],[2,1],[4,1],[0,2],[1,2],[2,2],[3,2],[4,2]]
";

fn level(rel: &str) -> EnvironmentSpec {
    load_level(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("levels").join(rel)).unwrap()
}

fn maze_model() -> TransitionProgram {
    TransitionProgram::parse(Family::Maze.reference_model()).unwrap()
}

fn ontop() -> BTreeMap<String, PredicateProgram> {
    BTreeMap::from([("ontop".to_string(), PredicateProgram::parse(ONTOP, "ontop", 2).unwrap())])
}

fn reach_operator() -> GroundedOperator {
    let d = parse_domain(MOVE_DOMAIN).unwrap();
    let p = parse_problem(REACH_PROBLEM).unwrap();
    ground(&d, &p)
        .into_iter()
        .find(|o| o.tag() == "moveontop(avatar,goal)")
        .unwrap()
}

fn actions(names: &[&str]) -> Vec<Action> {
    names.iter().map(|a| Action::new(*a)).collect()
}

fn scripted(replies: &[&str]) -> LlmClient {
    LlmClient::live(
        Box::new(ScriptedBackend::texts(replies.iter().copied())),
        LlmConfig::default(),
    )
}

fn fenced(code: &str) -> String {
    format!("Here you go.\n\n```wmdsl\n{}\n```\n", code.trim_end())
}

/// Observations from stepping the real environment.
fn observe(spec: &EnvironmentSpec, moves: &[&str]) -> Vec<Transition> {
    let mut env = Environment::new(spec.clone(), 0).unwrap();
    moves
        .iter()
        .map(|m| {
            let before = env.state().raw.clone();
            let a = Action::new(*m);
            let after = env.step(&a).unwrap().raw.clone();
            Transition::new(before, a, after)
        })
        .collect()
}

#[test]
fn subgoal_search_finds_the_shortest_path() {
    let spec = parse_level(CORRIDOR).unwrap();
    let acts = spec.actions.clone();
    let path = bfs_subgoal(
        &spec.initial,
        &maze_model(),
        &reach_operator(),
        &ontop(),
        &acts,
        Some("avatar"),
        &Limits::default(),
        1000,
    )
    .unwrap();
    let moves: Vec<&str> = path.iter().map(|t| t.action.as_str()).collect();
    assert_eq!(moves, ["right", "right"]);
    assert!(path
        .iter()
        .all(|t| t.operator_tag.as_deref() == Some("moveontop(avatar,goal)")));
    // the predicted path is what the real environment does
    assert_eq!(
        path.iter()
            .map(|t| Transition {
                operator_tag: None,
                ..t.clone()
            })
            .collect::<Vec<_>>(),
        observe(&spec, &moves)
    );
}

#[test]
fn subgoal_already_satisfied_needs_no_actions() {
    let mut s = parse_level(CORRIDOR).unwrap().initial;
    s = RawState::from_json(&serde_json::json!({
        "avatar": [[3, 1]], "goal": [[3, 1]], "wall": s.get("wall").unwrap().to_json()
    }))
    .unwrap();
    let path = bfs_subgoal(
        &s,
        &maze_model(),
        &reach_operator(),
        &ontop(),
        &actions(&["up", "down", "left", "right"]),
        Some("avatar"),
        &Limits::default(),
        1000,
    )
    .unwrap();
    assert!(path.is_empty());
}

#[test]
fn sealed_goal_is_unreachable() {
    let spec = parse_level(SEALED).unwrap();
    let err = bfs_subgoal(
        &spec.initial,
        &maze_model(),
        &reach_operator(),
        &ontop(),
        &spec.actions,
        Some("avatar"),
        &Limits::default(),
        1000,
    )
    .unwrap_err();
    // one reachable cell
    assert!(matches!(err, AgentError::SubgoalUnreachable { explored: 1 }), "{err:?}");
}

#[test]
fn node_budget_is_enforced() {
    let spec = level("labyrinth/labyrinth_1.lvl");
    let err = bfs_subgoal(
        &spec.initial,
        &maze_model(),
        &reach_operator(),
        &ontop(),
        &spec.actions,
        Some("avatar"),
        &Limits::default(),
        3,
    )
    .unwrap_err();
    assert!(matches!(err, AgentError::NodeBudget { max_nodes: 3 }), "{err:?}");
}

#[test]
fn missing_classifier_is_reported() {
    let spec = parse_level(CORRIDOR).unwrap();
    let err = bfs_subgoal(
        &spec.initial,
        &maze_model(),
        &reach_operator(),
        &BTreeMap::new(),
        &spec.actions,
        None,
        &Limits::default(),
        10,
    )
    .unwrap_err();
    assert!(matches!(err, AgentError::UngroundedPredicate(ref p) if p == "ontop"));
}

#[test]
fn random_exploration_needs_steps() {
    let mut env = Environment::new(level("maze/maze_1.lvl"), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        explore_random(&mut env, 0, &mut rng),
        Err(AgentError::Precondition(_))
    ));
}

#[test]
fn random_exploration_is_seeded_and_resets() {
    let spec = level("maze/maze_1.lvl");
    let mut env = Environment::new(spec.clone(), 0).unwrap();
    let a = explore_random(&mut env, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(env.state().raw, spec.initial);
    assert_eq!(env.state().steps, 0);
    let b = explore_random(&mut env, 10, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(a.len(), 10);
    assert_eq!(a, b);
    assert_eq!(a[0].before, spec.initial);
    // every transition is what the simulator does from its start state
    let moves: Vec<&str> = a.iter().map(|t| t.action.as_str()).collect();
    assert_eq!(a, observe(&spec, &moves));
}

#[test]
fn accurate_model_passes_the_check() {
    let spec = parse_level(CORRIDOR).unwrap();
    let model = maze_model();
    let omega = reach_operator();
    let path = bfs_subgoal(
        &spec.initial,
        &model,
        &omega,
        &ontop(),
        &spec.actions,
        None,
        &Limits::default(),
        100,
    )
    .unwrap();
    let mut env = Environment::new(spec, 0).unwrap();
    let mut buffers = ReplayBuffers::default();
    let out = execute_and_check(&mut env, &path, &omega, &ontop(), &mut buffers, &Limits::default()).unwrap();
    assert_eq!(
        out,
        CheckOutcome {
            effects_hold: true,
            won: true,
            executed: 2
        }
    );
    assert_eq!(buffers.r_p, buffers.r_a);
}

#[test]
fn trap_ignorant_model_dies_and_buffers_diverge() {
    let spec = level("maze/trap_maze.lvl");
    let model = TransitionProgram::parse(TRAP_IGNORANT_MAZE).unwrap();
    let omega = reach_operator();
    let path = bfs_subgoal(
        &spec.initial,
        &model,
        &omega,
        &ontop(),
        &spec.actions,
        None,
        &Limits::default(),
        10_000,
    )
    .unwrap();
    // the predicted shortest path walks along the top row through the trap
    assert_eq!(path.len(), 9);
    let mut env = Environment::new(spec, 0).unwrap();
    let mut buffers = ReplayBuffers::default();
    let err = execute_and_check(&mut env, &path, &omega, &ontop(), &mut buffers, &Limits::default()).unwrap_err();
    assert!(matches!(err, AgentError::EnvironmentTerminated { steps: 8 }), "{err:?}");
    assert_eq!(buffers.r_p.len(), 8);
    assert_eq!(buffers.r_a.len(), 8);
    assert_eq!(buffers.mismatches_since(0), vec![7]);
    assert!(!buffers.r_a[7].after.contains("avatar"));
}

#[test]
fn empty_plan_with_effects_holding_passes() {
    let spec = parse_level(CORRIDOR).unwrap();
    let omega = reach_operator();
    let mut env = Environment::new(spec.clone(), 0).unwrap();
    for a in ["right", "right"] {
        env.step(&Action::new(a)).unwrap();
    }
    let mut buffers = ReplayBuffers::default();
    let out = execute_and_check(&mut env, &[], &omega, &ontop(), &mut buffers, &Limits::default()).unwrap();
    assert!(out.effects_hold);
    assert_eq!(out.executed, 0);
    assert!(buffers.r_a.is_empty());
}

fn movement_buffers(spec: &EnvironmentSpec) -> ReplayBuffers {
    ReplayBuffers {
        r_random: observe(spec, &["right"]),
        ..Default::default()
    }
}

#[test]
fn revision_fixes_an_empty_model() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let mut client = scripted(&[fenced(Family::Maze.reference_model()).as_str()]);
    let rev = revise_world_model(
        &mut client,
        &spec,
        &TransitionProgram::empty(),
        &buffers,
        &AgentConfig::default(),
        5,
    )
    .unwrap();
    assert_eq!(rev.attempts, 1);
    let t = &buffers.r_random[0];
    assert_eq!(
        run_transition(&rev.program, &t.before, &t.action, &Limits::default()).unwrap(),
        t.after
    );
    assert_eq!(client.log()[0].purpose, Purpose::Revision);
}

#[test]
fn revision_counts_rejected_candidates() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let identity = "def transition_model(state, action):\n    return state.copy()\n";
    let mut client = scripted(&[
        "no code here",
        fenced(identity).as_str(),
        fenced(Family::Maze.reference_model()).as_str(),
    ]);
    let rev = revise_world_model(
        &mut client,
        &spec,
        &TransitionProgram::empty(),
        &buffers,
        &AgentConfig::default(),
        5,
    )
    .unwrap();
    assert_eq!(rev.attempts, 3);
    assert_eq!(client.log().len(), 3);
}

#[test]
fn revision_budget_is_a_hard_cap() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let mut client = scripted(&["no", "no", "unused"]);
    let err = revise_world_model(
        &mut client,
        &spec,
        &TransitionProgram::empty(),
        &buffers,
        &AgentConfig::default(),
        2,
    )
    .unwrap_err();
    assert!(matches!(err, AgentError::RevisionExhausted { budget: 2 }));
    assert_eq!(client.log().len(), 2);
    let err = revise_world_model(
        &mut client,
        &spec,
        &TransitionProgram::empty(),
        &buffers,
        &AgentConfig::default(),
        0,
    )
    .unwrap_err();
    assert!(matches!(err, AgentError::RevisionExhausted { budget: 0 }));
    assert_eq!(client.log().len(), 2);
}

#[test]
fn revision_requires_a_prediction_error() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let mut client = scripted(&[]);
    let err = revise_world_model(&mut client, &spec, &maze_model(), &buffers, &AgentConfig::default(), 5).unwrap_err();
    assert!(matches!(err, AgentError::Precondition(_)));
    assert!(client.log().is_empty());
}

#[test]
fn world_model_synthesis_gives_up_after_the_repair_budget() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let mut client = scripted(&["prose", "prose", "prose", "prose", "unused"]);
    let err = synthesize_world_model(&mut client, &spec, &spec.initial, &buffers, &AgentConfig::default()).unwrap_err();
    assert!(
        matches!(err, AgentError::SynthesisExhausted { attempts: 4, .. }),
        "{err:?}"
    );
    assert_eq!(client.log().len(), 4);
}

#[test]
fn broken_world_model_is_repaired_once() {
    let spec = parse_level(CORRIDOR).unwrap();
    let buffers = movement_buffers(&spec);
    let broken = fenced("def transition_model(state, action):\n    return (");
    let mut client = scripted(&[broken.as_str(), fenced(Family::Maze.reference_model()).as_str()]);
    let model = synthesize_world_model(&mut client, &spec, &spec.initial, &buffers, &AgentConfig::default()).unwrap();
    assert_eq!(model.source().trim_end(), Family::Maze.reference_model().trim_end());
    let log = client.log();
    assert_eq!(log.len(), 2);
    // the repair prompt extends the original one
    assert!(log[1].request.prompt_text().starts_with(&log[0].request.prompt_text()));
}

#[test]
fn world_model_synthesis_needs_random_transitions() {
    let spec = parse_level(CORRIDOR).unwrap();
    let mut client = scripted(&[]);
    let err = synthesize_world_model(
        &mut client,
        &spec,
        &spec.initial,
        &ReplayBuffers::default(),
        &AgentConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, AgentError::Precondition(_)));
}

#[test]
fn wrong_arity_classifier_is_left_ungrounded() {
    let spec = parse_level(CORRIDOR).unwrap();
    let d = parse_domain(MOVE_DOMAIN).unwrap();
    let p = parse_problem(REACH_PROBLEM).unwrap();
    let unary = fenced("def ontop(state, obj1):\n    return False\n");
    let replies = vec![unary.as_str(); 4];
    let mut client = scripted(&replies);
    let set = synthesize_classifiers(
        &mut client,
        &spec,
        &spec.initial,
        &d,
        &p,
        &maze_model(),
        &BTreeMap::new(),
        &AgentConfig::default(),
    )
    .unwrap();
    assert_eq!(set.ungrounded, ["ontop"]);
    assert!(set.programs.is_empty());
    assert_eq!(client.log().len(), 4);
}

#[test]
fn classifier_true_on_empty_state_is_rejected() {
    let spec = parse_level(CORRIDOR).unwrap();
    let d = parse_domain(MOVE_DOMAIN).unwrap();
    let p = parse_problem(REACH_PROBLEM).unwrap();
    let always = fenced("def ontop(state, obj1, obj2):\n    return True\n");
    let mut client = scripted(&[always.as_str(), fenced(ONTOP).as_str()]);
    let set = synthesize_classifiers(
        &mut client,
        &spec,
        &spec.initial,
        &d,
        &p,
        &maze_model(),
        &BTreeMap::new(),
        &AgentConfig::default(),
    )
    .unwrap();
    assert_eq!(set.synthesized, ["ontop"]);
    assert!(set.ungrounded.is_empty());
    assert_eq!(client.log().len(), 2);
}

#[test]
fn existing_classifiers_cost_nothing() {
    let spec = parse_level(CORRIDOR).unwrap();
    let d = parse_domain(MOVE_DOMAIN).unwrap();
    let p = parse_problem(REACH_PROBLEM).unwrap();
    let mut client = scripted(&[]);
    let set = synthesize_classifiers(
        &mut client,
        &spec,
        &spec.initial,
        &d,
        &p,
        &maze_model(),
        &ontop(),
        &AgentConfig::default(),
    )
    .unwrap();
    assert!(set.synthesized.is_empty());
    assert!(client.log().is_empty());
}

#[test]
fn pddl_forms_are_split_at_top_level() {
    let forms = split_pddl_forms("; (not a form)\n(define (domain a)) junk (define (problem b) (x))");
    assert_eq!(forms, ["(define (domain a))", "(define (problem b) (x))"]);
}

/// Fixture answers, except that every classifier is constantly false.
fn blind_client() -> LlmClient {
    let backend = ResponderBackend::new(|req: &crate::llm::ChatRequest| {
        let prompt = req.prompt_text();
        if fixtures::prompt_kind(&prompt) == Some(fixtures::PromptKind::Predicates) {
            fenced("def ontop(state, obj1, obj2):\n    return False\n")
        } else {
            fixtures::respond(&prompt)
        }
    });
    LlmClient::live(Box::new(backend), LlmConfig::default())
}

#[test]
fn zero_exploration_budget_ends_the_level() {
    let spec = parse_level(CORRIDOR).unwrap();
    let mut config = AgentConfig::default();
    config.budgets.exploration_loops = 0;
    let mut lib = AbstractionLibrary::default();
    let r = solve_level(&spec, 0, &mut lib, &mut blind_client(), &config, 0);
    assert!(!r.solved);
    assert_eq!(r.explorations, 0);
    assert!(r.failure.as_deref().unwrap().contains("exploration"), "{:?}", r.failure);
    assert!(!r.infrastructure_error);
}

#[test]
fn exploration_rounds_are_bounded() {
    let spec = parse_level(CORRIDOR).unwrap();
    let mut config = AgentConfig::default();
    config.budgets.exploration_loops = 2;
    let mut lib = AbstractionLibrary::default();
    let r = solve_level(&spec, 0, &mut lib, &mut blind_client(), &config, 0);
    assert!(!r.solved);
    assert_eq!(r.explorations, 2);
}

#[test]
fn fixture_agent_solves_the_corridor() {
    let spec = parse_level(CORRIDOR).unwrap();
    let mut lib = AbstractionLibrary::default();
    let client = &mut LlmClient::live(Box::new(fixtures::fixture_backend()), LlmConfig::default());
    let r = solve_level(&spec, 0, &mut lib, client, &AgentConfig::default(), 0);
    assert!(r.solved, "{:?}", r.failure);
    assert!(r.first_plan_success);
    assert_eq!(r.plan, ["right", "right"]);
    assert_eq!(r.high_level_plan, ["moveontop(avatar,goal)"]);
    assert_eq!(r.total_tokens(), client.usage().total);
    assert_ne!(r.domain_hash_start, r.domain_hash_end);
    assert_eq!(r.domain_hash_end, lib.domain_hash());
}

#[test]
fn library_round_trips_through_a_directory() {
    let spec = parse_level(CORRIDOR).unwrap();
    let mut lib = AbstractionLibrary::default();
    let client = &mut LlmClient::live(Box::new(fixtures::fixture_backend()), LlmConfig::default());
    assert!(solve_level(&spec, 0, &mut lib, client, &AgentConfig::default(), 0).solved);
    let dir = tempfile::tempdir().unwrap();
    lib.save(dir.path()).unwrap();
    assert!(dir.path().join("domain.pddl").is_file());
    assert!(dir.path().join("classifiers/maze/ontop.wmdsl").is_file());
    assert!(dir.path().join("worldmodels/maze.wmdsl").is_file());
    let back = AbstractionLibrary::load(dir.path()).unwrap();
    assert_eq!(back.domain_hash(), lib.domain_hash());
    assert_eq!(back.domain, lib.domain);
    assert_eq!(back.provenance, lib.provenance);
    assert_eq!(back.world_models["maze"].source(), lib.world_models["maze"].source());
    let names = |l: &AbstractionLibrary| l.classifiers_for("maze").keys().cloned().collect::<Vec<_>>();
    assert_eq!(names(&back), names(&lib));
}

#[test]
fn loading_a_missing_library_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        AbstractionLibrary::load(&dir.path().join("nope")),
        Err(AgentError::Library(_))
    ));
}

#[test]
fn run_mode_names_round_trip() {
    for m in [RunMode::Full, RunMode::NoCurriculum, RunMode::Flat] {
        assert_eq!(m.as_str().parse::<RunMode>().unwrap(), m);
    }
    assert!("tc-c".parse::<RunMode>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn executed_predictions_and_observations_stay_aligned(
        moves in proptest::collection::vec(0usize..4, 0..12),
        trap_aware in any::<bool>(),
    ) {
        let spec = level("maze/trap_maze.lvl");
        let model = if trap_aware { maze_model() } else { TransitionProgram::parse(TRAP_IGNORANT_MAZE).unwrap() };
        let limits = Limits::default();
        let mut s = spec.initial.clone();
        let mut predicted = Vec::new();
        for i in moves {
            let a = spec.actions[i].clone();
            let next = run_transition(&model, &s, &a, &limits).unwrap();
            predicted.push(Transition::new(s, a, next.clone()));
            s = next;
        }
        let mut env = Environment::new(spec, 0).unwrap();
        let mut buffers = ReplayBuffers::default();
        let res = execute_and_check(&mut env, &predicted, &reach_operator(), &ontop(), &mut buffers, &limits);
        prop_assert_eq!(buffers.r_p.len(), buffers.r_a.len());
        for (p, a) in buffers.r_p.iter().zip(&buffers.r_a) {
            prop_assert_eq!(&p.before, &a.before);
            prop_assert_eq!(&p.action, &a.action);
            prop_assert_eq!(&p.operator_tag, &a.operator_tag);
        }
        // the reference model never disagrees with the simulator
        if trap_aware {
            prop_assert!(buffers.consistent());
        }
        if let Err(e) = res {
            prop_assert!(matches!(e, AgentError::EnvironmentTerminated { .. }), "unexpected error {:?}", e);
        }
    }
}
