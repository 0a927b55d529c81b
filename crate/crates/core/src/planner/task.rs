//! Ground task compiled to bit-packed states over fluent atoms.

use rustc_hash::FxHashMap;

use crate::pddl::{ground, AtomSet, Domain, GroundAction, GroundAtom, PlanStep, Problem, ProblemError, State};

pub type Bits = Box<[u64]>;

#[derive(Debug, Clone)]
pub struct CompiledAction {
    pub step: PlanStep,
    pub pre: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
    pre_mask: Bits,
}

/// A grounded problem. Atoms that no action adds or deletes are folded into
/// `rigid`; states only track the remaining fluents.
#[derive(Debug, Clone)]
pub struct Task {
    pub fluents: Vec<GroundAtom>,
    index: FxHashMap<GroundAtom, u32>,
    pub actions: Vec<CompiledAction>,
    pub init: Bits,
    pub goal: Vec<u32>,
    /// A goal atom is neither rigidly true nor ever added.
    pub goal_impossible: bool,
    pub rigid: State,
    /// For every fluent, the actions having it as a precondition.
    pub(crate) pre_of: Vec<Vec<u32>>,
    pub(crate) unconditional: Vec<u32>,
    /// Every action is listed under one of its rarest precondition fluents.
    trigger: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("domain: {0}")]
    Domain(#[from] crate::pddl::DomainError),
}

pub(crate) fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

#[inline]
pub(crate) fn test_bit(bits: &[u64], i: u32) -> bool {
    bits[(i / 64) as usize] >> (i % 64) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(bits: &mut [u64], i: u32) {
    bits[(i / 64) as usize] |= 1 << (i % 64);
}

#[inline]
pub(crate) fn clear_bit(bits: &mut [u64], i: u32) {
    bits[(i / 64) as usize] &= !(1 << (i % 64));
}

impl Task {
    pub fn new(d: &Domain, p: &Problem) -> Result<Task, TaskError> {
        d.check()?;
        p.check()?;
        let actions = ground(d, p);
        Ok(Task::from_ground(&actions, &p.init, &p.goal))
    }

    pub fn from_ground(actions: &[GroundAction], init: &State, goal: &AtomSet) -> Task {
        let mut fluents: Vec<GroundAtom> = actions.iter().flat_map(|a| a.add.iter().chain(&a.del)).cloned().collect::<AtomSet>().into_iter().collect();
        fluents.sort();
        let index: FxHashMap<GroundAtom, u32> = fluents.iter().enumerate().map(|(i, a)| (a.clone(), i as u32)).collect();
        let n = words(fluents.len());
        let rigid: State = init.iter().filter(|a| !index.contains_key(*a)).cloned().collect();

        let ids = |set: &AtomSet| -> Vec<u32> { set.iter().filter_map(|a| index.get(a).copied()).collect() };
        let mut compiled = Vec::with_capacity(actions.len());
        for a in actions {
            if a.pre.iter().any(|x| !index.contains_key(x) && !rigid.contains(x)) {
                continue;
            }
            let pre = ids(&a.pre);
            let mut pre_mask = vec![0u64; n].into_boxed_slice();
            for &f in &pre {
                set_bit(&mut pre_mask, f);
            }
            // Adds win over deletes of the same atom.
            let add = ids(&a.add);
            let del = ids(&a.del).into_iter().filter(|f| !add.contains(f)).collect();
            compiled.push(CompiledAction { step: a.step(), pre, add, del, pre_mask });
        }

        let mut init_bits = vec![0u64; n].into_boxed_slice();
        for a in init.iter() {
            if let Some(&f) = index.get(a) {
                set_bit(&mut init_bits, f);
            }
        }
        let goal_impossible = goal.iter().any(|g| !index.contains_key(g) && !rigid.contains(g));
        let goal_ids = ids(goal);

        let mut pre_of = vec![Vec::new(); fluents.len()];
        let mut unconditional = Vec::new();
        for (i, a) in compiled.iter().enumerate() {
            if a.pre.is_empty() {
                unconditional.push(i as u32);
            }
            for &f in &a.pre {
                pre_of[f as usize].push(i as u32);
            }
        }
        let mut trigger = vec![Vec::new(); fluents.len()];
        for (i, a) in compiled.iter().enumerate() {
            if let Some(&f) = a.pre.iter().min_by_key(|&&f| pre_of[f as usize].len()) {
                trigger[f as usize].push(i as u32);
            }
        }
        Task { fluents, index, actions: compiled, init: init_bits, goal: goal_ids, goal_impossible, rigid, pre_of, unconditional, trigger }
    }

    pub fn words(&self) -> usize {
        self.init.len()
    }

    pub fn fluent_id(&self, atom: &GroundAtom) -> Option<u32> {
        self.index.get(atom).copied()
    }

    #[inline]
    pub fn applicable(&self, state: &[u64], action: usize) -> bool {
        self.actions[action].pre_mask.iter().zip(state).all(|(m, s)| m & s == *m)
    }

    pub fn successor(&self, state: &[u64], action: usize) -> Bits {
        let a = &self.actions[action];
        let mut next: Bits = state.into();
        for &f in &a.del {
            clear_bit(&mut next, f);
        }
        for &f in &a.add {
            set_bit(&mut next, f);
        }
        next
    }

    pub fn is_goal(&self, state: &[u64]) -> bool {
        !self.goal_impossible && self.goal.iter().all(|&g| test_bit(state, g))
    }

    /// Applicable actions in canonical (ground) order.
    pub fn applicable_actions(&self, state: &[u64]) -> Vec<usize> {
        let mut out = Vec::new();
        self.applicable_into(state, &mut out);
        out
    }

    pub fn applicable_into(&self, state: &[u64], out: &mut Vec<usize>) {
        out.clear();
        out.extend(self.unconditional.iter().map(|&a| a as usize));
        for (w, &word) in state.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let f = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out.extend(self.trigger[f].iter().map(|&a| a as usize).filter(|&a| self.applicable(state, a)));
            }
        }
        out.sort_unstable();
    }

    pub fn encode(&self, state: &State) -> Bits {
        let mut bits = vec![0u64; self.words()].into_boxed_slice();
        for a in state.iter() {
            if let Some(&f) = self.index.get(a) {
                set_bit(&mut bits, f);
            }
        }
        bits
    }

    /// Full state: rigid atoms plus the fluents set in `bits`.
    pub fn decode(&self, bits: &[u64]) -> State {
        let mut s = self.rigid.clone();
        for (i, a) in self.fluents.iter().enumerate() {
            if test_bit(bits, i as u32) {
                s.insert(a.clone());
            }
        }
        s
    }

    /// Same task, different initial state.
    pub fn with_init(&self, state: &State) -> Task {
        let mut t = self.clone();
        t.init = self.encode(state);
        t
    }
}
