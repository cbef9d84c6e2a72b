//! The nine acceptance checks, one line each. Runs without the libtest
//! harness so the output is exactly one PASS or FAIL line per check.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tbrl::envs::{load_level, reset, true_transition};
use tbrl::harness::{run_curriculum, CurriculumConfig, RunReport};
use tbrl::llm::{Cassette, LlmClient, Purpose};
use tbrl::pddl::{parse_domain, parse_problem, plan, validate, PlanError, ValidateOptions, DEFAULT_MAX_NODES};
use tbrl::state::RawState;
use tbrl::wmdsl::{run_transition, EvalError, FaultKind, Limits, ParseError, SandboxChannel, TransitionProgram};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. planner against brute force

/// A STRIPS instance kept as plain data; the oracle never sees PDDL text.
struct Instance {
    /// (name, arity)
    predicates: Vec<(String, usize)>,
    objects: Vec<String>,
    schemas: Vec<Schema>,
    init: BTreeSet<GroundAtom>,
    goal: Vec<(GroundAtom, bool)>,
}

struct Schema {
    name: String,
    params: usize,
    /// (predicate index, parameter indices, negated)
    pre: Vec<(usize, Vec<usize>, bool)>,
    eff: Vec<(usize, Vec<usize>, bool)>,
}

type GroundAtom = (usize, Vec<usize>);

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let predicates: Vec<(String, usize)> = (0..rng.gen_range(1..=3))
        .map(|i| (format!("p{i}"), rng.gen_range(0..=2)))
        .collect();
    let objects: Vec<String> = (0..rng.gen_range(1..=6)).map(|i| format!("o{i}")).collect();
    let literal = |rng: &mut ChaCha8Rng, params: usize, neg: f64| -> Option<(usize, Vec<usize>, bool)> {
        let usable: Vec<usize> = (0..predicates.len())
            .filter(|&p| params > 0 || predicates[p].1 == 0)
            .collect();
        let p = *usable.get(rng.gen_range(0..usable.len().max(1)))?;
        let args = (0..predicates[p].1).map(|_| rng.gen_range(0..params)).collect();
        Some((p, args, rng.gen_bool(neg)))
    };
    let schemas = (0..rng.gen_range(1..=3))
        .map(|i| {
            let params = rng.gen_range(0..=2);
            Schema {
                name: format!("a{i}"),
                params,
                pre: (0..rng.gen_range(0..=2))
                    .filter_map(|_| literal(rng, params, 0.3))
                    .collect(),
                eff: (0..rng.gen_range(1..=3))
                    .filter_map(|_| literal(rng, params, 0.35))
                    .collect(),
            }
        })
        .collect();
    let atoms = all_atoms(&predicates, objects.len());
    let init = atoms.iter().filter(|_| rng.gen_bool(0.25)).cloned().collect();
    let goal = (0..rng.gen_range(1..=3))
        .map(|_| (atoms[rng.gen_range(0..atoms.len())].clone(), rng.gen_bool(0.2)))
        .collect();
    Instance {
        predicates,
        objects,
        schemas,
        init,
        goal,
    }
}

fn tuples(len: usize, n: usize) -> Vec<Vec<usize>> {
    (0..n.pow(len as u32))
        .map(|mut k| {
            let mut t = vec![0; len];
            for slot in t.iter_mut().rev() {
                *slot = k % n;
                k /= n;
            }
            t
        })
        .collect()
}

fn all_atoms(predicates: &[(String, usize)], n: usize) -> Vec<GroundAtom> {
    predicates
        .iter()
        .enumerate()
        .flat_map(|(p, (_, arity))| tuples(*arity, n).into_iter().map(move |t| (p, t)))
        .collect()
}

impl Instance {
    fn domain_text(&self) -> String {
        let mut s = String::from("(define (domain rnd) (:requirements :strips)\n  (:predicates");
        for (name, arity) in &self.predicates {
            let vars: String = (0..*arity).map(|i| format!(" ?v{i}")).collect();
            let _ = write!(s, " ({name}{vars})");
        }
        s.push(')');
        let lits = |ls: &[(usize, Vec<usize>, bool)]| -> String {
            let body: Vec<String> = ls
                .iter()
                .map(|(p, args, neg)| {
                    let a: String = args.iter().map(|i| format!(" ?x{i}")).collect();
                    let atom = format!("({}{a})", self.predicates[*p].0);
                    if *neg {
                        format!("(not {atom})")
                    } else {
                        atom
                    }
                })
                .collect();
            format!("(and {})", body.join(" "))
        };
        for sc in &self.schemas {
            let params: String = (0..sc.params).map(|i| format!(" ?x{i}")).collect();
            let _ = write!(
                s,
                "\n  (:action {} :parameters ({}) :precondition {} :effect {})",
                sc.name,
                params.trim(),
                lits(&sc.pre),
                lits(&sc.eff)
            );
        }
        s + ")"
    }

    fn atom_text(&self, (p, args): &GroundAtom) -> String {
        let a: String = args.iter().map(|i| format!(" {}", self.objects[*i])).collect();
        format!("({}{a})", self.predicates[*p].0)
    }

    fn problem_text(&self) -> String {
        let init: Vec<String> = self.init.iter().map(|a| self.atom_text(a)).collect();
        let goal: Vec<String> = self
            .goal
            .iter()
            .map(|(a, neg)| {
                if *neg {
                    format!("(not {})", self.atom_text(a))
                } else {
                    self.atom_text(a)
                }
            })
            .collect();
        format!(
            "(define (problem rnd-p) (:domain rnd) (:objects {}) (:init {}) (:goal (and {})))",
            self.objects.join(" "),
            init.join(" "),
            goal.join(" ")
        )
    }

    fn goal_holds(&self, s: &BTreeSet<GroundAtom>) -> bool {
        self.goal.iter().all(|(a, neg)| s.contains(a) != *neg)
    }

    /// Successor under schema `k` with arguments `args`, if applicable.
    fn apply(&self, s: &BTreeSet<GroundAtom>, k: usize, args: &[usize]) -> Option<BTreeSet<GroundAtom>> {
        let sc = &self.schemas[k];
        let bind = |p: usize, ps: &[usize]| -> GroundAtom { (p, ps.iter().map(|i| args[*i]).collect()) };
        if !sc.pre.iter().all(|(p, ps, neg)| s.contains(&bind(*p, ps)) != *neg) {
            return None;
        }
        let mut next = s.clone();
        for (p, ps, _) in sc.eff.iter().filter(|l| l.2) {
            next.remove(&bind(*p, ps));
        }
        for (p, ps, _) in sc.eff.iter().filter(|l| !l.2) {
            next.insert(bind(*p, ps));
        }
        Some(next)
    }

    /// Shortest plan length by exhaustive breadth-first search; `Err` if
    /// more than `cap` states are reachable.
    fn brute_force(&self, cap: usize) -> Result<Option<usize>, ()> {
        let ops: Vec<(usize, Vec<usize>)> = self
            .schemas
            .iter()
            .enumerate()
            .flat_map(|(k, sc)| tuples(sc.params, self.objects.len()).into_iter().map(move |t| (k, t)))
            .collect();
        let mut dist = HashMap::from([(self.init.clone(), 0usize)]);
        let mut queue = VecDeque::from([self.init.clone()]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            if self.goal_holds(&s) {
                return Ok(Some(d));
            }
            for (k, args) in &ops {
                if let Some(n) = self.apply(&s, *k, args) {
                    if !dist.contains_key(&n) {
                        if dist.len() >= cap {
                            return Err(());
                        }
                        dist.insert(n.clone(), d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        Ok(None)
    }
}

fn criterion_planner_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut compared, mut solvable, mut skipped) = (0, 0, 0);
    while compared < 200 {
        let inst = random_instance(&mut rng);
        let Ok(expected) = inst.brute_force(20_000) else {
            skipped += 1;
            continue;
        };
        let (dt, pt) = (inst.domain_text(), inst.problem_text());
        let d = parse_domain(&dt).map_err(|e| format!("{e}\n{dt}"))?;
        let p = parse_problem(&pt).map_err(|e| format!("{e}\n{pt}"))?;
        match (plan(&d, &p, DEFAULT_MAX_NODES), expected) {
            (Ok(pl), Some(len)) => {
                check(pl.len() == len, || {
                    format!("plan length {} but shortest is {len}\n{dt}\n{pt}", pl.len())
                })?;
                let mut s = inst.init.clone();
                for step in &pl.steps {
                    let k = inst
                        .schemas
                        .iter()
                        .position(|sc| sc.name == step.schema)
                        .ok_or("unknown schema")?;
                    let args: Vec<usize> = step
                        .args
                        .iter()
                        .map(|a| {
                            inst.objects
                                .iter()
                                .position(|o| o == a)
                                .ok_or(format!("unknown object {a}"))
                        })
                        .collect::<Result<_, _>>()?;
                    s = inst
                        .apply(&s, k, &args)
                        .ok_or_else(|| format!("{step} not applicable\n{dt}\n{pt}"))?;
                }
                check(inst.goal_holds(&s), || {
                    format!("plan does not reach the goal\n{dt}\n{pt}")
                })?;
                solvable += 1;
            }
            (Err(PlanError::Unsolvable { .. }), None) => {}
            (got, want) => return Err(format!("planner {got:?}, brute force {want:?}\n{dt}\n{pt}")),
        }
        compared += 1;
    }
    Ok(format!(
        "{compared} instances ({solvable} solvable, {skipped} oversized skipped)"
    ))
}

// ---------------------------------------------------------------------------
// 2. printed PDDL documents

fn forms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut start, mut comment) = (0usize, 0usize, false);
    for (i, c) in text.char_indices() {
        match c {
            '\n' => comment = false,
            _ if comment => {}
            ';' => comment = true,
            '(' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            ')' => {
                depth -= 1;
                if depth == 0 {
                    out.push(text[start..=i].to_string());
                }
            }
            _ => {}
        }
    }
    out
}

const LEARNED_ABSTRACTION: &str = "(:action moveontop
    :parameters (?obj1 - object ?obj2 - object)
    :precondition (not (ontop ?obj1 ?obj2))
    :effect (ontop ?obj1 ?obj2)
)";

fn criterion_printed_pddl() -> Result<String, String> {
    let mut docs: Vec<(String, String, String)> = Vec::new();
    for n in 1..=3 {
        let text =
            std::fs::read_to_string(root().join(format!("prompts/few_shot_{n}.txt"))).map_err(|e| e.to_string())?;
        let f = forms(&text);
        check(f.len() == 2, || {
            format!("few-shot {n}: expected a domain and a problem, found {} forms", f.len())
        })?;
        docs.push((format!("few-shot {n}"), f[0].clone(), f[1].clone()));
    }
    docs.push((
        "learned moveontop".into(),
        format!(
            "(define (domain game) (:requirements :strips :typing) (:types object)
               (:predicates (ontop ?obj1 - object ?obj2 - object)) {LEARNED_ABSTRACTION})"
        ),
        "(define (problem reach) (:domain game) (:objects avatar goal - object) (:init) (:goal (ontop avatar goal)))"
            .into(),
    ));
    let mut plans = Vec::new();
    for (name, dt, pt) in &docs {
        let d = parse_domain(dt).map_err(|e| format!("{name}: {e}"))?;
        let p = parse_problem(pt).map_err(|e| format!("{name}: {e}"))?;
        let report = validate(&d, &p, &ValidateOptions::default());
        check(report.is_valid(), || {
            format!(
                "{name}: {:?}",
                report.errors().map(|i| i.to_string()).collect::<Vec<_>>()
            )
        })?;
        let pl = plan(&d, &p, DEFAULT_MAX_NODES).map_err(|e| format!("{name}: {e}"))?;
        let steps: Vec<String> = pl.steps.iter().map(|s| s.to_string()).collect();
        check(steps.len() == 1, || format!("{name}: expected one step, got {steps:?}"))?;
        plans.push(steps);
    }
    check(plans[0] == ["placeontopof(mug, table)"], || {
        format!("toy problem planned {:?}", plans[0])
    })?;
    Ok(format!("4 documents; toy problem -> {:?}", plans[0]))
}

// ---------------------------------------------------------------------------
// 3. BabyAI reference model against the simulator

fn criterion_babyai_sweep() -> Result<String, String> {
    let spec = load_level(&root().join("levels/babyai/unlock_6x6.lvl")).map_err(|e| e.to_string())?;
    let model = TransitionProgram::parse(spec.family.reference_model()).map_err(|e| e.to_string())?;
    let limits = Limits::default();
    let start = reset(&spec, 0).map_err(|e| e.to_string())?.raw;
    let mut seen: HashSet<RawState> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut pairs = 0;
    while let Some(s) = queue.pop_front() {
        for a in spec.action_space() {
            let expected = true_transition(&spec, &s, a);
            let got =
                run_transition(&model, &s, a, &limits).map_err(|e| format!("{e} on {a} from\n{}", s.serialize()))?;
            check(got == expected, || format!("mismatch on {a} from\n{}", s.serialize()))?;
            pairs += 1;
            if seen.insert(expected.clone()) {
                queue.push_back(expected);
            }
        }
    }
    Ok(format!("{} states, {pairs} state-action pairs identical", seen.len()))
}

// ---------------------------------------------------------------------------
// 4, 7, 8. navigation curriculum through the command line

fn run_cli(config: &str, mode: &str) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tbrl"))
        .args(["run", "--config", config, "--mode", mode, "--format", "json"])
        .env_remove("TBRL_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn navigation(mode: &str) -> Result<(RunReport, Vec<u8>, i32), String> {
    let config = root().join("configs/navigation.toml");
    let (stdout, code) = run_cli(config.to_str().unwrap(), mode)?;
    let report: RunReport = serde_json::from_slice(&stdout).map_err(|e| format!("unparsable report: {e}"))?;
    Ok((report, stdout, code))
}

fn criterion_replay_curriculum() -> Result<String, String> {
    let started = Instant::now();
    let (report, _, code) = navigation("full")?;
    let elapsed = started.elapsed();
    let levels: Vec<&str> = report.rows.iter().map(|r| r.level.as_str()).collect();
    check(
        levels == ["labyrinth/labyrinth_1", "maze/maze_1", "sokoban/sokoban_1"],
        || format!("levels {levels:?}"),
    )?;
    check(code == 0, || format!("exit code {code}"))?;
    check(report.rows.iter().all(|r| r.solved), || "not every level solved".into())?;
    let abstr: Vec<u64> = report
        .rows
        .iter()
        .map(|r| r.tokens(Purpose::AbstractionSynthesis).total())
        .collect();
    check(abstr[0] > 0 && abstr[1] == 0 && abstr[2] == 0, || {
        format!("abstraction tokens {abstr:?}")
    })?;
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "3/3 solved, abstraction tokens {abstr:?}, {} ms",
        elapsed.as_millis()
    ))
}

fn criterion_determinism() -> Result<String, String> {
    let (_, a, _) = navigation("full")?;
    let (_, b, _) = navigation("full")?;
    let (ha, hb) = (hex::encode(Sha256::digest(&a)), hex::encode(Sha256::digest(&b)));
    check(ha == hb, || format!("report hashes differ: {ha} vs {hb}"))?;
    Ok(format!("sha256 {}", &ha[..16]))
}

fn criterion_ablations() -> Result<String, String> {
    let (blank, _, _) = navigation("no-curriculum")?;
    let abstr: Vec<u64> = blank
        .rows
        .iter()
        .map(|r| r.tokens(Purpose::AbstractionSynthesis).total())
        .collect();
    check(abstr.len() == 3 && abstr.iter().all(|&t| t > 0), || {
        format!("no-curriculum abstraction tokens {abstr:?}")
    })?;
    let (flat, _, _) = navigation("flat")?;
    let maze = flat
        .rows
        .iter()
        .find(|r| r.level == "maze/maze_1")
        .ok_or("no maze row")?;
    check(maze.solved, || format!("flat maze unsolved: {:?}", maze.failure))?;
    let symbolic: u64 = [
        Purpose::AbstractionSynthesis,
        Purpose::ProblemSynthesis,
        Purpose::ClassifierSynthesis,
    ]
    .into_iter()
    .map(|p| maze.tokens(p).total())
    .sum();
    check(symbolic == 0, || {
        format!("flat mode spent {symbolic} tokens on abstractions")
    })?;
    check(maze.high_level_plan.len() <= 1, || {
        format!("flat high-level plan {:?}", maze.high_level_plan)
    })?;
    Ok(format!(
        "no-curriculum abstraction tokens {abstr:?}; flat maze solved in {} steps",
        maze.plan.len()
    ))
}

// ---------------------------------------------------------------------------
// 5, 6. single-config replays through the library

fn replay(config: &str) -> Result<RunReport, String> {
    let config = CurriculumConfig::load(&root().join("configs").join(config)).map_err(|e| e.to_string())?;
    let cassette = Cassette::load(&config.cassette_path().ok_or("no cassette")?).map_err(|e| e.to_string())?;
    let mut client = LlmClient::replay(cassette, config.llm.clone());
    run_curriculum(&config, &mut client).map_err(|e| e.to_string())
}

fn criterion_revision() -> Result<String, String> {
    let report = replay("trap_maze.toml")?;
    let r = &report.rows[0];
    check(r.solved, || format!("unsolved: {:?}", r.failure))?;
    check(!r.first_plan_success, || {
        "the first plan was expected to die in the trap".into()
    })?;
    check(r.revisions == 1 && r.revision_attempts == 1, || {
        format!("{} revisions, {} attempts", r.revisions, r.revision_attempts)
    })?;
    check(r.explorations == 0, || format!("{} exploration rounds", r.explorations))?;
    Ok(format!("1 revision, solved with {:?}", r.plan))
}

fn criterion_wod() -> Result<String, String> {
    let report = replay("minihack.toml")?;
    let r = report
        .rows
        .iter()
        .find(|r| r.level == "minihack/wod_1")
        .ok_or("no wod row")?;
    check(r.solved, || format!("unsolved: {:?}", r.failure))?;
    let found = r
        .plan
        .windows(3)
        .any(|w| w[0] == "zap" && w[1] == "select_f" && w[2].starts_with("shoot_"));
    check(found, || format!("plan {:?} lacks zap, select_f, shoot", r.plan))?;
    Ok(format!("plan {:?}", r.plan))
}

// ---------------------------------------------------------------------------
// 9. sandbox

fn criterion_sandbox() -> Result<String, String> {
    let s = RawState::deserialize("avatar: [[1,1]]\n").map_err(|e| e.to_string())?;
    let eval = |src: &str| -> Result<Result<RawState, EvalError>, ParseError> {
        let p = TransitionProgram::parse(src)?;
        Ok(run_transition(
            &p,
            &s,
            &tbrl::state::Action::new("up"),
            &Limits::default(),
        ))
    };
    let static_channel = |src: &str| match eval(src) {
        Err(ParseError::SandboxViolation { channel, .. }) => Some(channel),
        _ => None,
    };
    let file = static_channel(
        "def transition_model(state, action):\n    data = open('/etc/passwd').read()\n    return state\n",
    );
    check(file == Some(SandboxChannel::Filesystem), || {
        format!("file read gave {file:?}")
    })?;
    let looping = static_channel(
        "def transition_model(state, action):\n    while True:\n        state = state.copy()\n    return state\n",
    );
    check(looping == Some(SandboxChannel::UnboundedLoop), || {
        format!("unbounded loop gave {looping:?}")
    })?;
    let clock = static_channel("def transition_model(state, action):\n    t = time.time()\n    return state\n");
    check(clock == Some(SandboxChannel::Clock), || {
        format!("clock access gave {clock:?}")
    })?;
    let missing = eval("def transition_model(state, action):\n    g = state['goal']\n    return state\n");
    let kind = match &missing {
        Ok(Err(e)) => e.fault_kind(),
        _ => None,
    };
    check(kind == Some(FaultKind::MissingKey), || {
        format!("bare index gave {missing:?}")
    })?;
    let big = eval("def transition_model(state, action):\n    cells = [0] * (10 ** 10)\n    return state\n");
    check(matches!(big, Ok(Err(EvalError::MemoryLimit { .. }))), || {
        format!("oversized allocation gave {big:?}")
    })?;
    Ok("filesystem, unbounded loop, clock, missing key and memory limit faults".into())
}

// ---------------------------------------------------------------------------

type Criterion = fn() -> Result<String, String>;

fn main() {
    let checks: [(&str, Criterion); 9] = [
        ("planner matches brute-force search", criterion_planner_oracle),
        ("printed PDDL documents round-trip", criterion_printed_pddl),
        ("BabyAI model matches the simulator", criterion_babyai_sweep),
        ("replayed navigation curriculum", criterion_replay_curriculum),
        ("one revision fixes the trap maze", criterion_revision),
        ("WoD kill sequence", criterion_wod),
        ("replays are byte-identical", criterion_determinism),
        ("ablation contrast", criterion_ablations),
        ("sandbox negative suite", criterion_sandbox),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let started = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let ms = started.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({ms} ms): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({ms} ms): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
