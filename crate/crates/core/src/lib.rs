pub mod agent;
pub mod envs;
pub mod harness;
pub mod llm;
pub mod pddl;
pub mod state;
pub mod wmdsl;
