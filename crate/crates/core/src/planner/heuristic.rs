use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::task::{test_bit, Task};
use crate::pddl::{AtomSet, GroundAction, State};

/// Reusable buffers for repeated evaluations on one task.
pub(crate) struct HAdd {
    cost: Vec<u64>,
    unsat: Vec<u32>,
    sum: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl HAdd {
    pub(crate) fn new(task: &Task) -> Self {
        HAdd { cost: vec![u64::MAX; task.fluents.len()], unsat: vec![0; task.actions.len()], sum: vec![0; task.actions.len()], heap: BinaryHeap::new() }
    }

    /// `None` when some goal atom is unreachable under the delete relaxation.
    pub(crate) fn eval(&mut self, task: &Task, state: &[u64]) -> Option<u64> {
        if task.goal_impossible {
            return None;
        }
        self.cost.fill(u64::MAX);
        self.sum.fill(0);
        for (i, a) in task.actions.iter().enumerate() {
            self.unsat[i] = a.pre.len() as u32;
        }
        self.heap.clear();
        for f in 0..task.fluents.len() as u32 {
            if test_bit(state, f) {
                self.cost[f as usize] = 0;
                self.heap.push(Reverse((0, f)));
            }
        }
        for &a in &task.unconditional {
            for &g in &task.actions[a as usize].add {
                if 1 < self.cost[g as usize] {
                    self.cost[g as usize] = 1;
                    self.heap.push(Reverse((1, g)));
                }
            }
        }
        let mut open_goals = task.goal.iter().filter(|&&g| self.cost[g as usize] != 0).count();
        while let Some(Reverse((c, f))) = self.heap.pop() {
            if open_goals == 0 {
                break;
            }
            if c > self.cost[f as usize] {
                continue;
            }
            if task.goal.contains(&f) && c > 0 {
                open_goals -= 1;
            }
            for &a in &task.pre_of[f as usize] {
                let a = a as usize;
                self.unsat[a] -= 1;
                self.sum[a] = self.sum[a].saturating_add(c);
                if self.unsat[a] == 0 {
                    let nc = self.sum[a].saturating_add(1);
                    for &g in &task.actions[a].add {
                        if nc < self.cost[g as usize] {
                            self.cost[g as usize] = nc;
                            self.heap.push(Reverse((nc, g)));
                        }
                    }
                }
            }
        }
        let mut h = 0u64;
        for &g in &task.goal {
            let c = self.cost[g as usize];
            if c == u64::MAX {
                return None;
            }
            h = h.saturating_add(c);
        }
        Some(h)
    }
}

/// Additive delete-relaxation estimate of the number of actions needed to
/// reach `goal` from `s`. `None` stands for infinity.
pub fn h_add(s: &State, goal: &AtomSet, actions: &[GroundAction]) -> Option<u64> {
    let task = Task::from_ground(actions, s, goal);
    let init = task.init.clone();
    HAdd::new(&task).eval(&task, &init)
}
