//! Grounding with delete-relaxation reachability pruning.
//!
//! The reachable atom set is grown to a fixpoint by applying every schema
//! instantiation whose precondition already holds in it (deletes ignored).
//! Instantiations are found by a backtracking join of the precondition
//! atoms against a per-predicate index, so parameters constrained by the
//! precondition are never enumerated blindly.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use super::semantics::instantiate;
use super::{ActionSchema, Atom, AtomSet, Domain, GroundAction, GroundAtom, Problem, Term, OBJECT_TYPE};

struct Index<'a> {
    by_pred: FxHashMap<&'a str, Vec<&'a GroundAtom>>,
}

impl<'a> Index<'a> {
    fn new(atoms: impl IntoIterator<Item = &'a GroundAtom>) -> Self {
        let mut by_pred: FxHashMap<&str, Vec<&GroundAtom>> = FxHashMap::default();
        for a in atoms {
            by_pred.entry(a.predicate.as_str()).or_default().push(a);
        }
        Index { by_pred }
    }

    fn candidates(&self, pred: &str) -> &[&'a GroundAtom] {
        self.by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }
}

struct Matcher<'s> {
    schema: &'s ActionSchema,
    objects: &'s BTreeMap<String, String>,
    typed: BTreeMap<&'s str, Vec<&'s str>>,
}

impl<'s> Matcher<'s> {
    fn new(schema: &'s ActionSchema, problem: &'s Problem) -> Self {
        let mut typed = BTreeMap::new();
        for p in &schema.params {
            typed.entry(p.ty.as_str()).or_insert_with(|| problem.objects_of_type(&p.ty).collect::<Vec<_>>());
        }
        Matcher { schema, objects: &problem.objects, typed }
    }

    fn type_ok(&self, param: usize, obj: &str) -> bool {
        let ty = &self.schema.params[param].ty;
        match self.objects.get(obj) {
            Some(t) => ty == OBJECT_TYPE || t == ty,
            None => false,
        }
    }

    /// Calls `emit` with every parameter binding whose precondition holds in
    /// `index`.
    fn bindings(&self, index: &Index<'_>, emit: &mut dyn FnMut(&[&str])) {
        let pre: Vec<(&Atom, Vec<Option<usize>>)> = self
            .schema
            .pre
            .iter()
            .map(|a| {
                let slots = a.args.iter().map(|t| t.as_var().map(|v| self.schema.param_index(v).expect("checked domain"))).collect();
                (a, slots)
            })
            .collect();
        let mut binding: Vec<Option<&str>> = vec![None; self.schema.arity()];
        let mut done = vec![false; pre.len()];
        self.join(index, &pre, &mut done, &mut binding, emit);
    }

    fn join<'x>(
        &'x self,
        index: &Index<'x>,
        pre: &[(&'x Atom, Vec<Option<usize>>)],
        done: &mut [bool],
        binding: &mut Vec<Option<&'x str>>,
        emit: &mut dyn FnMut(&[&str]),
    ) {
        // Most-bound atom first, then the one with the fewest candidates.
        let next = (0..pre.len()).filter(|&i| !done[i]).min_by_key(|&i| {
            let (atom, slots) = &pre[i];
            let unbound = slots.iter().filter(|s| matches!(s, Some(p) if binding[*p].is_none())).count();
            (unbound, index.candidates(&atom.predicate).len())
        });
        let Some(i) = next else {
            self.enumerate_free(0, binding, emit);
            return;
        };
        done[i] = true;
        let (atom, slots) = &pre[i];
        'cand: for cand in index.candidates(&atom.predicate) {
            if cand.args.len() != atom.args.len() {
                continue;
            }
            let mut newly = Vec::new();
            for (k, (term, obj)) in atom.args.iter().zip(&cand.args).enumerate() {
                match (term, slots[k]) {
                    (Term::Obj(o), _) => {
                        if o != obj {
                            undo(binding, &newly);
                            continue 'cand;
                        }
                    }
                    (Term::Var(_), Some(p)) => match binding[p] {
                        Some(b) if b == obj => {}
                        Some(_) => {
                            undo(binding, &newly);
                            continue 'cand;
                        }
                        None => {
                            if !self.type_ok(p, obj) {
                                undo(binding, &newly);
                                continue 'cand;
                            }
                            binding[p] = Some(obj.as_str());
                            newly.push(p);
                        }
                    },
                    (Term::Var(_), None) => unreachable!(),
                }
            }
            self.join(index, pre, done, binding, emit);
            undo(binding, &newly);
        }
        done[i] = false;
    }

    fn enumerate_free<'x>(&'x self, from: usize, binding: &mut Vec<Option<&'x str>>, emit: &mut dyn FnMut(&[&str])) {
        match (from..binding.len()).find(|&p| binding[p].is_none()) {
            None => {
                let args: Vec<&str> = binding.iter().map(|b| b.expect("bound")).collect();
                emit(&args);
            }
            Some(p) => {
                let ty = self.schema.params[p].ty.as_str();
                for obj in &self.typed[ty] {
                    binding[p] = Some(obj);
                    self.enumerate_free(p + 1, binding, emit);
                }
                binding[p] = None;
            }
        }
    }
}

fn undo(binding: &mut [Option<&str>], newly: &[usize]) {
    for &p in newly {
        binding[p] = None;
    }
}

/// Atoms reachable from `p.init` when delete effects are ignored.
pub fn relaxed_reachable(d: &Domain, p: &Problem) -> AtomSet {
    let mut reachable: AtomSet = p.init.atoms().clone();
    let matchers: Vec<Matcher<'_>> = d.actions.values().map(|s| Matcher::new(s, p)).collect();
    loop {
        let mut fresh: Vec<GroundAtom> = Vec::new();
        {
            let index = Index::new(&reachable);
            for m in &matchers {
                m.bindings(&index, &mut |args| {
                    let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
                    let ga = instantiate(m.schema, &owned);
                    fresh.extend(ga.add.into_iter().filter(|a| !reachable.contains(a)));
                });
            }
        }
        if fresh.is_empty() {
            return reachable;
        }
        reachable.extend(fresh);
    }
}

/// Every type-correct ground action whose precondition is relaxed-reachable
/// from the initial state, in canonical order.
pub fn ground(d: &Domain, p: &Problem) -> Vec<GroundAction> {
    let reachable = relaxed_reachable(d, p);
    let index = Index::new(&reachable);
    let mut out: BTreeSet<GroundAction> = BTreeSet::new();
    for schema in d.actions.values() {
        let m = Matcher::new(schema, p);
        m.bindings(&index, &mut |args| {
            let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
            out.insert(instantiate(schema, &owned));
        });
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact;
    use crate::pddl::{parse_domain, parse_problem};

    #[test]
    fn zero_ary_action_grounds_once() {
        let d = parse_domain("(define (domain d) (:predicates (p)) (:action a :parameters () :precondition () :effect (p)))").unwrap();
        let p = parse_problem("(define (problem x) (:domain d) (:goal (p)))").unwrap();
        assert_eq!(ground(&d, &p).len(), 1);
    }

    #[test]
    fn two_adjacent_tiles_give_two_moves() {
        let d = parse_domain(
            "(define (domain g) (:types agent tile) (:predicates (at ?h - agent ?t - tile) (neighbours ?a ?b - tile))
             (:action move :parameters (?h - agent ?from ?to - tile)
               :precondition (and (at ?h ?from) (neighbours ?from ?to))
               :effect (and (at ?h ?to) (not (at ?h ?from)))))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem x) (:domain g) (:objects hero - agent t1 t2 - tile)
              (:init (at hero t1) (neighbours t1 t2) (neighbours t2 t1)) (:goal (at hero t2)))",
        )
        .unwrap();
        let moves = ground(&d, &p);
        assert_eq!(moves.len(), 2);
        assert_eq!(moves[0].args, vec!["hero", "t1", "t2"]);
        assert_eq!(moves[1].args, vec!["hero", "t2", "t1"]);
        assert!(relaxed_reachable(&d, &p).contains(&fact!("at", "hero", "t2")));
    }

    #[test]
    fn unreachable_instances_pruned_and_types_respected() {
        let d = parse_domain(
            "(define (domain g) (:types a b) (:predicates (p ?x - a) (q ?x - a))
             (:action go :parameters (?x - a) :precondition (p ?x) :effect (q ?x)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem x) (:domain g) (:objects a1 a2 - a b1 - b) (:init (p a1) (p b1)) (:goal ()))").unwrap();
        let g = ground(&d, &p);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].args, vec!["a1"]);
    }

    #[test]
    fn free_parameters_range_over_their_type() {
        let d = parse_domain(
            "(define (domain g) (:types a) (:predicates (q ?x - a))
             (:action mark :parameters (?x - a) :precondition () :effect (q ?x)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem x) (:domain g) (:objects a1 a2 a3 - a) (:init) (:goal ()))").unwrap();
        assert_eq!(ground(&d, &p).len(), 3);
    }
}
