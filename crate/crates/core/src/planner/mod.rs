//! Forward state-space planning over grounded STRIPS tasks.

mod heuristic;
mod search;
mod task;
mod walk;

pub use heuristic::h_add;
pub use search::{Limits, Outcome, SearchResult, SearchStats};
pub use task::{Task, TaskError};
pub use walk::{walk_task, Walk};

use crate::pddl::{Domain, Problem, State};

/// Satisficing plan via greedy best-first search on h_add.
pub fn plan_gbfs(d: &Domain, p: &Problem, limits: Limits) -> Result<SearchResult, TaskError> {
    let task = Task::new(d, p)?;
    log::debug!("grounded {} actions over {} fluents", task.actions.len(), task.fluents.len());
    let r = search::checked(d, p, search::gbfs(&task, limits));
    log::debug!("gbfs: {:?}", r.stats);
    Ok(r)
}

/// Shortest plan, or a proof that none exists (within `bound` steps, when
/// given).
pub fn plan_optimal(d: &Domain, p: &Problem, bound: Option<usize>, limits: Limits) -> Result<SearchResult, TaskError> {
    let task = Task::new(d, p)?;
    log::debug!("grounded {} actions over {} fluents", task.actions.len(), task.fluents.len());
    let r = search::checked(d, p, search::bfs(&task, bound, limits));
    log::debug!("breadth-first: {:?}", r.stats);
    Ok(r)
}

/// Optimal search on an already compiled task, e.g. one reused across many
/// start states.
pub fn plan_optimal_task(task: &Task, bound: Option<usize>, limits: Limits) -> SearchResult {
    search::bfs(task, bound, limits)
}

pub fn random_walk(d: &Domain, p: &Problem, steps: usize, seed: u64) -> Result<State, TaskError> {
    Ok(walk_task(&Task::new(d, p)?, steps, seed).state)
}
