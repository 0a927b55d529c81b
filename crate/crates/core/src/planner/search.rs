use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::heuristic::HAdd;
use super::task::{Bits, Task};
use crate::pddl::{validate_plan, Domain, Plan, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_expansions: Option<u64>,
    pub timeout: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_expansions: Some(5_000_000), timeout: Some(Duration::from_secs(300)) }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits { max_expansions: None, timeout: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Plan { plan: Plan, cost: usize },
    ProvedNoPlan,
    ProvedNoPlanWithinBound { bound: usize },
    ResourceLimit { reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Plan { plan, .. } => Some(plan),
            _ => None,
        }
    }

    pub fn cost(&self) -> Option<usize> {
        self.plan().map(|p| p.len())
    }
}

/// Search nodes: states plus back pointers.
struct Space {
    states: Vec<Bits>,
    parent: Vec<(u32, u32)>,
    seen: FxHashMap<Bits, u32>,
}

impl Space {
    fn new(init: Bits) -> Self {
        let mut seen = FxHashMap::default();
        seen.insert(init.clone(), 0);
        Space { states: vec![init], parent: vec![(u32::MAX, u32::MAX)], seen }
    }

    /// Index of the new node, or `None` if the state was seen before.
    fn insert(&mut self, state: Bits, parent: u32, action: u32) -> Option<u32> {
        use std::collections::hash_map::Entry;
        match self.seen.entry(state) {
            Entry::Occupied(_) => None,
            Entry::Vacant(v) => {
                let id = self.states.len() as u32;
                self.states.push(v.key().clone());
                v.insert(id);
                self.parent.push((parent, action));
                Some(id)
            }
        }
    }

    fn plan_to(&self, task: &Task, mut node: u32) -> Plan {
        let mut steps = Vec::new();
        while self.parent[node as usize].0 != u32::MAX {
            let (p, a) = self.parent[node as usize];
            steps.push(task.actions[a as usize].step.clone());
            node = p;
        }
        steps.reverse();
        Plan(steps)
    }

    fn depth(&self, mut node: u32) -> usize {
        let mut d = 0;
        while self.parent[node as usize].0 != u32::MAX {
            node = self.parent[node as usize].0;
            d += 1;
        }
        d
    }
}

struct Budget {
    start: Instant,
    limits: Limits,
}

impl Budget {
    fn exceeded(&self, expanded: u64) -> Option<String> {
        if let Some(max) = self.limits.max_expansions {
            if expanded >= max {
                return Some(format!("expansion limit of {max} reached"));
            }
        }
        if let Some(t) = self.limits.timeout {
            if expanded.is_multiple_of(256) && self.start.elapsed() >= t {
                return Some(format!("time limit of {:.1}s reached", t.as_secs_f64()));
            }
        }
        None
    }
}

fn finish(outcome: Outcome, expanded: u64, generated: u64, start: Instant) -> SearchResult {
    SearchResult { outcome, stats: SearchStats { expanded, generated, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 } }
}

/// Greedy best-first search on h_add with eager evaluation. The open list is
/// ordered by heuristic value, then by insertion order.
pub fn gbfs(task: &Task, limits: Limits) -> SearchResult {
    let start = Instant::now();
    let budget = Budget { start, limits };
    let mut h = HAdd::new(task);
    let (mut expanded, mut generated) = (0u64, 0u64);
    if task.is_goal(&task.init) {
        return finish(Outcome::Plan { plan: Plan::default(), cost: 0 }, 0, 0, start);
    }
    let Some(h0) = h.eval(task, &task.init) else {
        return finish(Outcome::ProvedNoPlan, 0, 0, start);
    };
    let mut space = Space::new(task.init.clone());
    let mut open = BinaryHeap::new();
    let mut succ = Vec::new();
    let mut counter = 0u64;
    open.push(Reverse((h0, counter, 0u32)));
    while let Some(Reverse((_, _, node))) = open.pop() {
        if let Some(reason) = budget.exceeded(expanded) {
            return finish(Outcome::ResourceLimit { reason }, expanded, generated, start);
        }
        expanded += 1;
        let state = space.states[node as usize].clone();
        task.applicable_into(&state, &mut succ);
        for &a in &succ {
            let next = task.successor(&state, a);
            generated += 1;
            let goal = task.is_goal(&next);
            let Some(id) = space.insert(next, node, a as u32) else { continue };
            if goal {
                let plan = space.plan_to(task, id);
                let cost = plan.len();
                return finish(Outcome::Plan { plan, cost }, expanded, generated, start);
            }
            if let Some(hv) = h.eval(task, &space.states[id as usize]) {
                counter += 1;
                open.push(Reverse((hv, counter, id)));
            }
        }
    }
    finish(Outcome::ProvedNoPlan, expanded, generated, start)
}

/// Breadth-first search with duplicate detection; plans are shortest. With
/// a bound, only plans of at most `bound` steps are considered.
pub fn bfs(task: &Task, bound: Option<usize>, limits: Limits) -> SearchResult {
    let start = Instant::now();
    let budget = Budget { start, limits };
    let (mut expanded, mut generated) = (0u64, 0u64);
    if task.is_goal(&task.init) {
        return finish(Outcome::Plan { plan: Plan::default(), cost: 0 }, 0, 0, start);
    }
    let exhausted = |cut: bool| match (cut, bound) {
        (true, Some(bound)) => Outcome::ProvedNoPlanWithinBound { bound },
        _ => Outcome::ProvedNoPlan,
    };
    if task.goal_impossible {
        return finish(Outcome::ProvedNoPlan, 0, 0, start);
    }
    let mut space = Space::new(task.init.clone());
    let mut queue = VecDeque::from([(0u32, 0usize)]);
    let mut succ = Vec::new();
    let mut cut = false;
    while let Some((node, depth)) = queue.pop_front() {
        if bound.is_some_and(|b| depth >= b) {
            cut = true;
            continue;
        }
        if let Some(reason) = budget.exceeded(expanded) {
            return finish(Outcome::ResourceLimit { reason }, expanded, generated, start);
        }
        expanded += 1;
        let state = space.states[node as usize].clone();
        task.applicable_into(&state, &mut succ);
        for &a in &succ {
            let next = task.successor(&state, a);
            generated += 1;
            let goal = task.is_goal(&next);
            let Some(id) = space.insert(next, node, a as u32) else { continue };
            if goal {
                let plan = space.plan_to(task, id);
                debug_assert_eq!(plan.len(), space.depth(id));
                let cost = plan.len();
                return finish(Outcome::Plan { plan, cost }, expanded, generated, start);
            }
            queue.push_back((id, depth + 1));
        }
    }
    finish(exhausted(cut), expanded, generated, start)
}

pub(crate) fn checked(d: &Domain, p: &Problem, r: SearchResult) -> SearchResult {
    if let Outcome::Plan { plan, .. } = &r.outcome {
        let report = validate_plan(d, p, plan).expect("planner emitted a malformed plan");
        assert!(report.valid, "planner emitted an invalid plan: {:?}", report.failure);
    }
    r
}
