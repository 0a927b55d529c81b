use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::task::Task;
use crate::pddl::{PlanStep, State};

/// A random walk: the actions taken and the state reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Walk {
    pub seed: u64,
    pub actions: Vec<PlanStep>,
    pub state: State,
}

/// Applies up to `steps` uniformly chosen applicable actions, taken in the
/// canonical ground order, stopping early in a state with no applicable
/// action.
pub fn walk_task(task: &Task, steps: usize, seed: u64) -> Walk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = task.init.clone();
    let mut actions = Vec::with_capacity(steps);
    let mut choices = Vec::new();
    for _ in 0..steps {
        task.applicable_into(&state, &mut choices);
        if choices.is_empty() {
            break;
        }
        let a = choices[rng.random_range(0..choices.len())];
        state = task.successor(&state, a);
        actions.push(task.actions[a].step.clone());
    }
    Walk { seed, actions, state: task.decode(&state) }
}
