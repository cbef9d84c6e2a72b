//! Runs a world-model program on a state, then shows programs the sandbox
//! refuses or stops.
//!
//! ```text
//! cargo run --example wmdsl_sandbox
//! ```

use tbrl::envs::Family;
use tbrl::state::{Action, RawState};
use tbrl::wmdsl::{run_transition, Limits, TransitionProgram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = TransitionProgram::parse(Family::Maze.reference_model())?;
    let s = RawState::deserialize("avatar: [[1,1]]\ngoal: [[2,1]]\nwall: [[0,1],[1,0],[1,2]]\n")?;
    for a in ["left", "right"] {
        let next = run_transition(&model, &s, &Action::new(a), &Limits::default())?;
        print!("after {a}:\n{}", s.diff(&next));
    }

    let rejected = [
        "def transition_model(state, action):\n    return open('/etc/passwd').read()\n",
        "def transition_model(state, action):\n    while True:\n        pass\n",
    ];
    for src in rejected {
        println!("{}", TransitionProgram::parse(src).unwrap_err());
    }
    let stopped = [
        "def transition_model(state, action):\n    return state['key']\n",
        "def transition_model(state, action):\n    cells = [0] * (10 ** 10)\n    return state\n",
    ];
    for src in stopped {
        let p = TransitionProgram::parse(src)?;
        println!(
            "{}",
            run_transition(&p, &s, &Action::new("up"), &Limits::default()).unwrap_err()
        );
    }
    Ok(())
}
