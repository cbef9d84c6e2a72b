//! Parses a PDDL domain and problem, checks them and prints a shortest plan.
//!
//! ```text
//! cargo run --example plan_pddl
//! ```

use tbrl::pddl::{parse_domain, parse_problem, plan, print_problem, validate, ValidateOptions, DEFAULT_MAX_NODES};

const DOMAIN: &str = "
(define (domain keys)
  (:requirements :strips :typing)
  (:types agent key door - object)
  (:predicates (holding ?a - agent ?k - key) (unlocked ?d - door))
  (:action pickup
    :parameters (?a - agent ?k - key)
    :precondition (not (holding ?a ?k))
    :effect (holding ?a ?k))
  (:action unlock
    :parameters (?a - agent ?d - door ?k - key)
    :precondition (and (holding ?a ?k) (not (unlocked ?d)))
    :effect (unlocked ?d)))";

const PROBLEM: &str = "
(define (problem open-door)
  (:domain keys)
  (:objects red_agent - agent blue_key - key blue_door - door)
  (:init)
  (:goal (unlocked blue_door)))";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = parse_domain(DOMAIN)?;
    let problem = parse_problem(PROBLEM)?;
    let report = validate(&domain, &problem, &ValidateOptions::default());
    for issue in &report.issues {
        println!("note: {issue}");
    }
    print!("{}", print_problem(&problem));
    for (i, step) in plan(&domain, &problem, DEFAULT_MAX_NODES)?.steps.iter().enumerate() {
        println!("{}. {step}", i + 1);
    }
    Ok(())
}
