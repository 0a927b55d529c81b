use std::collections::BTreeMap;

use super::{ActionSchema, Atom, AtomSet, GroundAction, GroundAtom, State, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{action} is not applicable: missing {}", missing.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
pub struct NotApplicable {
    pub action: String,
    pub missing: Vec<GroundAtom>,
}

pub fn applicable(s: &State, a: &GroundAction) -> bool {
    a.pre.is_subset(s.atoms())
}

pub fn missing_preconditions(s: &State, a: &GroundAction) -> Vec<GroundAtom> {
    a.pre.difference(s.atoms()).cloned().collect()
}

/// `(s \ del) ∪ add`, defined only when the precondition holds.
pub fn apply(s: &State, a: &GroundAction) -> Result<State, NotApplicable> {
    if !applicable(s, a) {
        return Err(NotApplicable { action: a.to_string(), missing: missing_preconditions(s, a) });
    }
    let mut next = s.clone();
    for d in &a.del {
        next.remove(d);
    }
    next.extend(a.add.iter().cloned());
    Ok(next)
}

pub(crate) fn substitute(atom: &Atom, binding: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[v.as_str()].to_string(),
                Term::Obj(o) => o.clone(),
            })
            .collect(),
    }
}

/// Substitutes `args` for the schema's parameters. Types are not checked.
///
/// # Panics
/// If `args.len()` differs from the schema arity.
pub fn instantiate(schema: &ActionSchema, args: &[String]) -> GroundAction {
    assert_eq!(schema.arity(), args.len(), "arity mismatch instantiating {}", schema.name);
    let binding: BTreeMap<&str, &str> = schema.params.iter().zip(args).map(|(p, a)| (p.name.as_str(), a.as_str())).collect();
    let ground = |set: &std::collections::BTreeSet<Atom>| -> AtomSet { set.iter().map(|a| substitute(a, &binding)).collect() };
    let add = ground(&schema.add);
    // A substitution can collapse an add and a delete onto the same ground
    // atom; the add wins, matching `(s \ del) ∪ add`.
    let del = ground(&schema.del);
    GroundAction { name: schema.name.clone(), args: args.to_vec(), pre: ground(&schema.pre), add, del }
}
