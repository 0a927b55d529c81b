//! Planning-based game testing: STRIPS models learned from gameplay traces,
//! checked against those traces, and used to generate test scripts that run
//! against a reference grid RPG simulator.

pub mod aml;
pub mod consistency;
pub mod pddl;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod trace;
