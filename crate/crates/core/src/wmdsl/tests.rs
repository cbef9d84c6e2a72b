use super::*;
use crate::state::RawState;

fn state(text: &str) -> RawState {
    RawState::deserialize(text).unwrap()
}

fn step(src: &str, s: &RawState, a: &str) -> Result<RawState, EvalError> {
    run_transition(
        &TransitionProgram::parse(src).unwrap(),
        s,
        &Action::new(a),
        &Limits::default(),
    )
}

fn violation(src: &str) -> SandboxChannel {
    match TransitionProgram::parse(src) {
        Err(ParseError::SandboxViolation { channel, .. }) => channel,
        other => panic!("expected a sandbox violation, got {other:?}"),
    }
}

#[test]
fn empty_model_predicts_no_change() {
    let s = state("avatar: [[1,1]]\nwall: [[0,0],[0,1]]\n");
    for a in ["up", "down", "left", "right"] {
        assert_eq!(
            run_transition(&TransitionProgram::empty(), &s, &Action::new(a), &Limits::default()).unwrap(),
            s
        );
    }
}

#[test]
fn two_place_predicate() {
    let p = PredicateProgram::parse(
        "def holds(state, a, b):\n    return pos(state, a) == pos(state, b)\n",
        "ontop",
        2,
    )
    .unwrap();
    let s = state("mug: [[4,4]]\ntable: [[4,4]]\n");
    assert!(run_predicate(&p, &s, &["mug".into(), "table".into()], &Limits::default()).unwrap());
}

#[test]
fn absent_object_is_false_not_a_fault() {
    let src = r#"
def isleftof(state, obj1, obj2):
    pos1 = state.get(obj1)
    pos2 = state.get(obj2)
    if pos1 is None or pos2 is None:
        return False
    return pos1[0][0] < pos2[0][0]
"#;
    let p = PredicateProgram::parse(src, "isleftof", 2).unwrap();
    let s = state("book: [[1,1]]\n");
    assert!(!run_predicate(&p, &s, &["book".into(), "lamp".into()], &Limits::default()).unwrap());
    // bare indexing of the absent key faults, which also reads as false
    let bare = PredicateProgram::parse(
        "def isleftof(state, a, b):\n    return state[a][0][0] < state[b][0][0]\n",
        "isleftof",
        2,
    )
    .unwrap();
    assert!(!run_predicate(&bare, &s, &["book".into(), "lamp".into()], &Limits::default()).unwrap());
}

#[test]
fn holding_reads_agent_carrying() {
    let p = PredicateProgram::parse(
        "def holding(state, agent, obj):\n    return obj in state.get('agent_carrying', [])\n",
        "holding",
        2,
    )
    .unwrap();
    let s = state("red_agent: [[1,1]]\nagent_carrying: [\"red_key\"]\n");
    assert!(run_predicate(&p, &s, &["red_agent".into(), "red_key".into()], &Limits::default()).unwrap());
    assert!(!run_predicate(&p, &s, &["red_agent".into(), "blue_key".into()], &Limits::default()).unwrap());
}

#[test]
fn builtin_catalog_examples() {
    let src = r#"
from utils import directions

def transition(state, action):
    new_state = state.copy()
    new_state['up'] = directions["up"]
    if get(state, "cake", none) is None:
        new_state['nocake'] = [0, 0]
    name = swap_prefix('locked_blue_door', 'locked_', 'open_')
    new_state[name] = [[1, 1]]
    return new_state
"#;
    let out = step(src, &RawState::new(), "noop").unwrap();
    assert_eq!(out.scalar("up"), Some(crate::state::Pos::new(0, -1)));
    assert!(out.contains("nocake"));
    assert!(out.contains("open_blue_door"));
    assert!(builtin_library().iter().any(|d| d.name == "directions"));
    assert!(render_catalog().contains("swap_prefix"));
}

#[test]
fn mutation_through_places_and_purity() {
    let src = r#"
def transition(state, action):
    new_state = state.copy()
    new_state['agent_carrying'].append('blue_key')
    new_state['box'][0][1] += 1
    del new_state['goal']
    return new_state
"#;
    let s = state("agent_carrying: []\nbox: [[2,2]]\ngoal: [[3,3]]\n");
    let before = s.clone();
    let out = step(src, &s, "x").unwrap();
    assert_eq!(s, before, "input must not change");
    assert_eq!(out.names("agent_carrying"), ["blue_key".to_string()]);
    assert_eq!(out.positions("box"), [crate::state::Pos::new(2, 3)]);
    assert!(!out.contains("goal"));
}

#[test]
fn python_idioms() {
    let src = r#"
import copy

def helper(p, d):
    return [p[0] + d[0], p[1] + d[1]]

def transition(state, action):
    s = copy.deepcopy(state)
    x, y = s['avatar'][0]
    moved = helper([x, y], directions[action])
    walls = [w for w in s.get('wall', []) if w[0] >= 0]
    if moved not in walls and -7 // 2 == -4 and -7 % 2 == 1:
        s['avatar'] = [moved]
    tag = f"{action}_{len(walls)}"
    s[tag] = [[len(tag), 0]]
    return s
"#;
    let out = step(src, &state("avatar: [[1,1]]\nwall: [[2,1]]\n"), "down").unwrap();
    assert_eq!(out.positions("avatar"), [crate::state::Pos::new(1, 2)]);
    assert!(out.contains("down_1"));
    let out = step(src, &state("avatar: [[1,1]]\nwall: [[2,1]]\n"), "right").unwrap();
    assert_eq!(out.positions("avatar"), [crate::state::Pos::new(1, 1)]);
}

#[test]
fn designated_sandbox_channels() {
    assert_eq!(
        violation("def transition(s, a):\n    f = open('/etc/passwd')\n    return s\n"),
        SandboxChannel::Filesystem
    );
    assert_eq!(
        violation("def transition(s, a):\n    t = time.time()\n    return s\n"),
        SandboxChannel::Clock
    );
    assert_eq!(
        violation("import time\ndef transition(s, a):\n    return s\n"),
        SandboxChannel::Import
    );
    assert_eq!(
        violation("def transition(s, a):\n    while True:\n        pass\n"),
        SandboxChannel::UnboundedLoop
    );
    assert_eq!(
        violation("def transition(s, a):\n    return transition(s, a)\n"),
        SandboxChannel::Recursion
    );
    assert_eq!(
        violation("def f(s):\n    return g(s)\ndef g(s):\n    return f(s)\ndef transition(s, a):\n    return s\n"),
        SandboxChannel::Recursion
    );
    assert_eq!(
        violation("def transition(s, a):\n    print(s)\n    return s\n"),
        SandboxChannel::Io
    );
    assert_eq!(
        violation("def transition(s, a):\n    return eval('s')\n"),
        SandboxChannel::Reflection
    );
    assert_eq!(
        violation("def transition(s, a):\n    r = random.choice([1])\n    return s\n"),
        SandboxChannel::Randomness
    );
    assert_eq!(
        violation("def transition(s, a):\n    return os.listdir('.')\n"),
        SandboxChannel::Process
    );
}

#[test]
fn unknown_functions_and_entries_are_parse_errors() {
    assert!(matches!(
        TransitionProgram::parse("def transition(s, a):\n    return frobnicate(s)\n"),
        Err(ParseError::Syntax { .. })
    ));
    assert!(matches!(
        TransitionProgram::parse("def step(s, a):\n    return s\n"),
        Err(ParseError::Entry(_))
    ));
    assert!(matches!(
        PredicateProgram::parse("def p(s, a):\n    return True\n", "p", 2),
        Err(ParseError::Entry(_))
    ));
}

#[test]
fn budgets_and_faults() {
    let s = RawState::new();
    assert!(matches!(
        step(
            "def transition(s, a):\n    for i in range(10**18):\n        pass\n    return s\n",
            &s,
            "x"
        ),
        Err(EvalError::StepBudgetExceeded { .. })
    ));
    assert!(matches!(
        step("def transition(s, a):\n    x = [0] * (10**9)\n    return s\n", &s, "x"),
        Err(EvalError::MemoryLimit { .. })
    ));
    assert!(matches!(
        step(
            "def transition(s, a):\n    x = list(range(10**12))\n    return s\n",
            &s,
            "x"
        ),
        Err(EvalError::MemoryLimit { .. })
    ));
    assert_eq!(
        step("def transition(s, a):\n    return s['cake']\n", &s, "x")
            .unwrap_err()
            .fault_kind(),
        Some(FaultKind::MissingKey)
    );
    assert_eq!(
        step("def transition(s, a):\n    return 1 // 0\n", &s, "x")
            .unwrap_err()
            .fault_kind(),
        Some(FaultKind::DivisionByZero)
    );
    assert_eq!(
        step("def transition(s, a):\n    return 2 ** 200\n", &s, "x")
            .unwrap_err()
            .fault_kind(),
        Some(FaultKind::Overflow)
    );
    assert_eq!(
        step("def transition(s, a):\n    return 3\n", &s, "x")
            .unwrap_err()
            .fault_kind(),
        Some(FaultKind::MalformedState)
    );
    assert_eq!(
        step("def transition(s, a):\n    return s + 1\n", &s, "x")
            .unwrap_err()
            .fault_kind(),
        Some(FaultKind::TypeMismatch)
    );
}

#[test]
fn shared_structure_cannot_bypass_budgets() {
    // 2^60 logical nodes, 60 physical ones
    let grow = "    x = [0]\n    for i in range(60):\n        x = [x, x]\n";
    let cmp = format!("def transition(s, a):\n{grow}    y = [0]\n    for i in range(60):\n        y = [y, y]\n    if x == y:\n        return s\n    return s\n");
    let cmp = cmp.replace("y = [y, y]", "y = [y, [y, y][1]]");
    assert!(matches!(
        step(&cmp, &RawState::new(), "x"),
        Err(EvalError::StepBudgetExceeded { .. })
    ));
    let render = format!("def transition(s, a):\n{grow}    t = str(x)\n    return s\n");
    assert!(matches!(
        step(&render, &RawState::new(), "x"),
        Err(EvalError::MemoryLimit { .. })
    ));
}

#[test]
fn deterministic_across_threads() {
    let src = "def transition(s, a):\n    n = s.copy()\n    n['k'] = [[len(s), 1]]\n    return n\n";
    let p = TransitionProgram::parse(src).unwrap();
    let s = state("avatar: [[1,1]]\n");
    let expected = run_transition(&p, &s, &Action::new("up"), &Limits::default()).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (p, s) = (p.clone(), s.clone());
            std::thread::spawn(move || run_transition(&p, &s, &Action::new("up"), &Limits::default()).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expected);
    }
}

#[test]
fn several_classifiers_in_one_block() {
    let src = "def near(s, a, b):\n    return manhattan(pos(s, a), pos(s, b)) == 1\n\ndef at(s, a, b):\n    return pos(s, a) == pos(s, b)\n";
    let (found, missing) = parse_predicates(src, &[("near".into(), 2), ("at".into(), 2), ("gone".into(), 1)]).unwrap();
    assert_eq!(found.len(), 2);
    assert_eq!(missing.len(), 1);
    let s = state("a: [[1,1]]\nlocked_b: [[1,2]]\n");
    // `pos` resolves configuration prefixes
    assert!(run_predicate(&found[0], &s, &["a".into(), "b".into()], &Limits::default()).unwrap());
}
