//! Action-model learning from traces, Observer style.
//!
//! Every logged step is lifted into a candidate schema by replacing action
//! arguments with parameters `?p0 .. ?pn`. A candidate's precondition is the
//! lifted part of the pre-state that only mentions arguments; its effects are
//! the lifted state differences. Candidates of the same action are merged by
//! intersecting preconditions and uniting effects, and the merged schema is
//! re-checked against every instance it came from.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::pddl::{ActionSchema, Atom, AtomSet, Domain, GroundAtom, PlanStep, PredicateDecl, State, Term, TypedParam, OBJECT_TYPE};
use crate::trace::{InconsistentStep, NamedTrace};

/// Where an instance was observed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StepRef {
    pub trace: String,
    pub step: usize,
}

impl std::fmt::Display for StepRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} step {}", self.trace, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedInstance {
    pub source: StepRef,
    pub action: PlanStep,
    pub arg_types: Vec<String>,
    /// Static and dynamic atoms before the step.
    pub pre: State,
    /// Static and dynamic atoms after the step.
    pub post: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub schema: ActionSchema,
    pub instance: ObservedInstance,
    /// Effect atoms that mention an object outside the action arguments.
    pub unliftable: Vec<GroundAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("no trace contains any step")]
    EmptyInput,
    #[error("{at}: `{action}` has {found} arguments but {expected} elsewhere ({first})")]
    ArityMismatch { action: String, expected: usize, found: usize, at: StepRef, first: StepRef },
    #[error("{at}: argument {position} of `{action}` has type `{found}` but `{expected}` elsewhere ({first})")]
    TypeConflict { action: String, position: usize, expected: String, found: String, at: Box<StepRef>, first: Box<StepRef> },
    #[error("{at}: merged `{action}` does not reproduce the logged transition ({detail})")]
    EffectConflict { action: String, at: StepRef, detail: String },
    #[error("object `{object}` has type `{first}` in {first_trace} but `{second}` in {second_trace}")]
    ObjectTypeConflict { object: String, first: String, first_trace: String, second: String, second_trace: String },
    #[error("{trace}: {source}")]
    InvalidTrace { trace: String, source: InconsistentStep },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ActionStats {
    pub instances: usize,
    /// Lifted precondition candidates seen in any instance.
    pub candidate_preconditions: usize,
    /// Candidates removed by the intersection.
    pub dropped_preconditions: usize,
    pub learned_preconditions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LearnReport {
    pub actions: BTreeMap<String, ActionStats>,
    pub warnings: Vec<String>,
}

fn param_name(i: usize) -> String {
    format!("p{i}")
}

/// All liftings of `atom` when every object in it is an argument: an object
/// passed in several positions may stand for any of their parameters.
fn liftings(atom: &GroundAtom, positions: &BTreeMap<&str, Vec<usize>>) -> Option<Vec<Atom>> {
    let choices: Vec<&Vec<usize>> = atom.objects().map(|o| positions.get(o)).collect::<Option<_>>()?;
    let mut out = vec![Vec::with_capacity(choices.len())];
    for options in choices {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Term>| {
                options.iter().map(move |&i| {
                    let mut next = prefix.clone();
                    next.push(Term::Var(param_name(i)));
                    next
                })
            })
            .collect();
    }
    Some(out.into_iter().map(|args| Atom::new(atom.predicate.clone(), args)).collect())
}

fn ground_with(atom: &Atom, args: &[String]) -> GroundAtom {
    GroundAtom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => args[v[1..].parse::<usize>().expect("learned parameter")].clone(),
                Term::Obj(o) => o.clone(),
            })
            .collect(),
    }
}

pub fn lift_instance(inst: &ObservedInstance) -> Candidate {
    let mut positions: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, a) in inst.action.args.iter().enumerate() {
        positions.entry(a.as_str()).or_default().push(i);
    }
    let params = inst.arg_types.iter().enumerate().map(|(i, ty)| TypedParam::new(param_name(i), ty.clone())).collect();
    let pre: BTreeSet<Atom> = inst.pre.iter().filter_map(|a| liftings(a, &positions)).flatten().collect();
    let mut unliftable = Vec::new();
    let mut lift_effects = |atoms: Vec<&GroundAtom>| -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for a in atoms {
            match liftings(a, &positions) {
                Some(l) => out.extend(l),
                None => unliftable.push(a.clone()),
            }
        }
        out
    };
    let add = lift_effects(inst.post.atoms().difference(inst.pre.atoms()).collect());
    let del = lift_effects(inst.pre.atoms().difference(inst.post.atoms()).collect());
    Candidate { schema: ActionSchema { name: inst.action.name.clone(), params, pre, add, del }, instance: inst.clone(), unliftable }
}

/// Intersects preconditions and unites effects of candidates for one action.
///
/// When an instance passes the same object in several argument positions its
/// effects lift ambiguously; only liftings that agree with every instance's
/// post-state are kept.
pub fn merge_candidates(cands: &[Candidate]) -> Result<ActionSchema, LearnError> {
    let first = cands.first().expect("at least one candidate");
    let name = &first.schema.name;
    for c in &cands[1..] {
        if c.schema.arity() != first.schema.arity() {
            return Err(LearnError::ArityMismatch {
                action: name.clone(),
                expected: first.schema.arity(),
                found: c.schema.arity(),
                at: c.instance.source.clone(),
                first: first.instance.source.clone(),
            });
        }
        for (position, (a, b)) in first.schema.params.iter().zip(&c.schema.params).enumerate() {
            if a.ty != b.ty {
                return Err(LearnError::TypeConflict {
                    action: name.clone(),
                    position,
                    expected: a.ty.clone(),
                    found: b.ty.clone(),
                    at: Box::new(c.instance.source.clone()),
                    first: Box::new(first.instance.source.clone()),
                });
            }
        }
    }

    let mut pre = first.schema.pre.clone();
    for c in &cands[1..] {
        pre.retain(|a| c.schema.pre.contains(a));
    }
    let holds_after = |atom: &Atom, c: &Candidate| c.instance.post.contains(&ground_with(atom, &c.instance.action.args));
    let add: BTreeSet<Atom> = cands.iter().flat_map(|c| c.schema.add.iter()).filter(|a| cands.iter().all(|c| holds_after(a, c))).cloned().collect();
    let del: BTreeSet<Atom> = cands.iter().flat_map(|c| c.schema.del.iter()).filter(|a| cands.iter().all(|c| !holds_after(a, c))).cloned().collect();
    let schema = ActionSchema { name: name.clone(), params: first.schema.params.clone(), pre, add, del };

    for c in cands {
        let args = &c.instance.action.args;
        let ground = |set: &BTreeSet<Atom>| -> AtomSet { set.iter().map(|a| ground_with(a, args)).collect() };
        let (gadd, gdel) = (ground(&schema.add), ground(&schema.del));
        let mut predicted: AtomSet = c.instance.pre.atoms().difference(&gdel).cloned().collect();
        predicted.extend(gadd);
        let ignored: AtomSet = c.unliftable.iter().cloned().collect();
        let observed: AtomSet = c.instance.post.atoms().clone();
        let diff: Vec<String> = predicted.symmetric_difference(&observed).filter(|a| !ignored.contains(*a)).map(ToString::to_string).collect();
        if !diff.is_empty() {
            return Err(LearnError::EffectConflict { action: name.clone(), at: c.instance.source.clone(), detail: format!("differs on {}", diff.join(", ")) });
        }
    }
    Ok(schema)
}

fn check_object_types(traces: &[NamedTrace]) -> Result<BTreeMap<String, String>, LearnError> {
    let mut types: BTreeMap<String, (String, String)> = BTreeMap::new();
    for t in traces {
        for (obj, ty) in &t.trace.header.objects {
            match types.get(obj) {
                Some((known, origin)) if known != ty => {
                    return Err(LearnError::ObjectTypeConflict {
                        object: obj.clone(),
                        first: known.clone(),
                        first_trace: origin.clone(),
                        second: ty.clone(),
                        second_trace: t.id.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    types.insert(obj.clone(), (ty.clone(), t.id.clone()));
                }
            }
        }
    }
    Ok(types.into_iter().map(|(o, (t, _))| (o, t)).collect())
}

pub fn observed_instances(traces: &[NamedTrace]) -> Result<Vec<ObservedInstance>, LearnError> {
    let mut out = Vec::new();
    for t in traces {
        let states = t.trace.reconstruct_states().map_err(|source| LearnError::InvalidTrace { trace: t.id.clone(), source })?;
        let with_static = |s: &State| -> State {
            let mut full = s.clone();
            full.extend(t.trace.header.static_facts.iter().cloned());
            full
        };
        for (i, step) in t.trace.steps.iter().enumerate() {
            let arg_types = step.action.args.iter().map(|a| t.trace.header.objects.get(a).cloned().unwrap_or_else(|| OBJECT_TYPE.to_string())).collect();
            out.push(ObservedInstance {
                source: StepRef { trace: t.id.clone(), step: step.index },
                action: step.action.clone(),
                arg_types,
                pre: with_static(&states[i]),
                post: with_static(&states[i + 1]),
            });
        }
    }
    Ok(out)
}

fn infer_predicates(traces: &[NamedTrace], objects: &BTreeMap<String, String>, report: &mut LearnReport) -> BTreeMap<String, PredicateDecl> {
    let mut seen: BTreeMap<String, Vec<BTreeSet<String>>> = BTreeMap::new();
    for t in traces {
        let h = &t.trace.header;
        let step_atoms = t.trace.steps.iter().flat_map(|s| s.delta.iter().flat_map(|d| d.atoms()).chain(s.state.iter().flat_map(|st| st.iter())));
        for atom in h.static_facts.iter().chain(h.init.iter()).chain(step_atoms) {
            let slots = seen.entry(atom.predicate.clone()).or_insert_with(|| vec![BTreeSet::new(); atom.args.len()]);
            if slots.len() != atom.args.len() {
                report.warnings.push(format!("predicate `{}` is used with different arities; keeping {}", atom.predicate, slots.len()));
                continue;
            }
            for (slot, o) in slots.iter_mut().zip(atom.objects()) {
                slot.insert(objects.get(o).cloned().unwrap_or_else(|| OBJECT_TYPE.to_string()));
            }
        }
    }
    seen.into_iter()
        .map(|(name, slots)| {
            let params = slots
                .into_iter()
                .enumerate()
                .map(|(i, tys)| {
                    let ty = if tys.len() == 1 {
                        tys.into_iter().next().expect("one type")
                    } else {
                        report.warnings.push(format!("argument {i} of `{name}` mixes types; declared as `object`"));
                        OBJECT_TYPE.to_string()
                    };
                    TypedParam::new(format!("x{i}"), ty)
                })
                .collect();
            (name.clone(), PredicateDecl { name, params })
        })
        .collect()
}

/// Learns one schema per action name seen in `traces`.
///
/// The result only depends on the set of traces, not on their order.
pub fn learn_domain(traces: &[NamedTrace], name: &str) -> Result<(Domain, LearnReport), LearnError> {
    let objects = check_object_types(traces)?;
    let mut instances = observed_instances(traces)?;
    if instances.is_empty() {
        return Err(LearnError::EmptyInput);
    }
    instances.sort_by(|a, b| (&a.action, &a.pre, &a.post, &a.source).cmp(&(&b.action, &b.pre, &b.post, &b.source)));

    let mut report = LearnReport::default();
    let mut groups: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for inst in &instances {
        let cand = lift_instance(inst);
        for a in &cand.unliftable {
            report.warnings.push(format!("{}: effect {a} of `{}` mentions an object that is not an argument; dropped", inst.source, inst.action.name));
        }
        groups.entry(inst.action.name.clone()).or_default().push(cand);
    }

    let mut domain = Domain { name: name.to_string(), ..Domain::default() };
    domain.types = objects.values().filter(|t| t.as_str() != OBJECT_TYPE).cloned().collect();
    domain.predicates = infer_predicates(traces, &objects, &mut report);
    for (action, cands) in &groups {
        let schema = merge_candidates(cands)?;
        let union: BTreeSet<&Atom> = cands.iter().flat_map(|c| c.schema.pre.iter()).collect();
        report.actions.insert(
            action.clone(),
            ActionStats {
                instances: cands.len(),
                candidate_preconditions: union.len(),
                dropped_preconditions: union.len() - schema.pre.len(),
                learned_preconditions: schema.pre.len(),
            },
        );
        for d in schema.unguarded_deletes() {
            report.warnings.push(format!("`{action}` deletes {d} without requiring it"));
        }
        domain.actions.insert(action.clone(), schema);
    }
    Ok((domain, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact;

    fn types(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn instance(action: PlanStep, objs: &BTreeMap<String, String>, pre: &[GroundAtom], post: &[GroundAtom]) -> ObservedInstance {
        ObservedInstance {
            source: StepRef { trace: "t".into(), step: 0 },
            arg_types: action.args.iter().map(|a| objs[a].clone()).collect(),
            action,
            pre: pre.iter().cloned().collect(),
            post: post.iter().cloned().collect(),
        }
    }

    fn lifted(pred: &str, params: &[usize]) -> Atom {
        Atom::new(pred, params.iter().map(|&i| Term::Var(param_name(i))).collect())
    }

    fn objs() -> BTreeMap<String, String> {
        types(&[("hero", "agent"), ("t1", "tile"), ("t2", "tile"), ("t3", "tile"), ("q1", "quest"), ("apple1", "item")])
    }

    #[test]
    fn move_lifting_excludes_foreign_atoms() {
        let pre = [fact!("at", "hero", "t1"), fact!("neighbours", "t1", "t2"), fact!("quest-ready", "q1")];
        let post = [fact!("at", "hero", "t2"), fact!("neighbours", "t1", "t2"), fact!("quest-ready", "q1")];
        let c = lift_instance(&instance(PlanStep::new("move", ["hero", "t1", "t2"]), &objs(), &pre, &post));
        assert_eq!(c.schema.add, [lifted("at", &[0, 2])].into_iter().collect());
        assert_eq!(c.schema.del, [lifted("at", &[0, 1])].into_iter().collect());
        assert_eq!(c.schema.pre, [lifted("at", &[0, 1]), lifted("neighbours", &[1, 2])].into_iter().collect());
        assert_eq!(c.schema.params[1], TypedParam::new("p1", "tile"));
        assert!(c.unliftable.is_empty());
    }

    #[test]
    fn no_change_means_no_effects() {
        let s = [fact!("at", "hero", "t1")];
        let c = lift_instance(&instance(PlanStep::new("wait", ["hero"]), &objs(), &s, &s));
        assert!(c.schema.add.is_empty() && c.schema.del.is_empty());
    }

    #[test]
    fn unliftable_effect_is_recorded() {
        let pre = [fact!("at", "hero", "t1")];
        let post = [fact!("at", "hero", "t1"), fact!("item-at", "apple1", "t3")];
        let c = lift_instance(&instance(PlanStep::new("start", ["hero"]), &objs(), &pre, &post));
        assert_eq!(c.unliftable, vec![fact!("item-at", "apple1", "t3")]);
        assert!(c.schema.add.is_empty());
        assert!(merge_candidates(&[c]).is_ok());
    }

    #[test]
    fn single_candidate_unchanged() {
        let pre = [fact!("at", "hero", "t1"), fact!("neighbours", "t1", "t2")];
        let post = [fact!("at", "hero", "t2"), fact!("neighbours", "t1", "t2")];
        let c = lift_instance(&instance(PlanStep::new("move", ["hero", "t1", "t2"]), &objs(), &pre, &post));
        assert_eq!(merge_candidates(std::slice::from_ref(&c)).unwrap(), c.schema);
    }

    #[test]
    fn spurious_precondition_drops_out() {
        // Identical moves except that `lit(t2)` happens to hold in the first.
        let a = lift_instance(&instance(
            PlanStep::new("move", ["hero", "t1", "t2"]),
            &objs(),
            &[fact!("at", "hero", "t1"), fact!("neighbours", "t1", "t2"), fact!("lit", "t2")],
            &[fact!("at", "hero", "t2"), fact!("neighbours", "t1", "t2"), fact!("lit", "t2")],
        ));
        let b = lift_instance(&instance(
            PlanStep::new("move", ["hero", "t2", "t3"]),
            &objs(),
            &[fact!("at", "hero", "t2"), fact!("neighbours", "t2", "t3")],
            &[fact!("at", "hero", "t3"), fact!("neighbours", "t2", "t3")],
        ));
        assert!(a.schema.pre.contains(&lifted("lit", &[2])));
        let merged = merge_candidates(&[a, b]).unwrap();
        assert!(!merged.pre.contains(&lifted("lit", &[2])));
        assert_eq!(merged.pre.len(), 2);
    }

    #[test]
    fn differing_effects_conflict() {
        let a = lift_instance(&instance(
            PlanStep::new("touch", ["hero", "t1"]),
            &objs(),
            &[fact!("at", "hero", "t1")],
            &[fact!("at", "hero", "t1"), fact!("lit", "t1")],
        ));
        let b = lift_instance(&instance(PlanStep::new("touch", ["hero", "t2"]), &objs(), &[fact!("at", "hero", "t2")], &[fact!("at", "hero", "t2")]));
        assert!(matches!(merge_candidates(&[a, b]), Err(LearnError::EffectConflict { .. })));
    }

    #[test]
    fn type_and_arity_conflicts() {
        let a = lift_instance(&instance(PlanStep::new("look", ["hero", "t1"]), &objs(), &[], &[]));
        let b = lift_instance(&instance(PlanStep::new("look", ["hero", "q1"]), &objs(), &[], &[]));
        assert!(matches!(merge_candidates(&[a.clone(), b]), Err(LearnError::TypeConflict { position: 1, .. })));
        let c = lift_instance(&instance(PlanStep::new("look", ["hero"]), &objs(), &[], &[]));
        assert!(matches!(merge_candidates(&[a, c]), Err(LearnError::ArityMismatch { .. })));
    }

    #[test]
    fn aliased_arguments_keep_every_consistent_reading() {
        // `enough ?have ?need`: once observed with have == need, once not.
        let o = types(&[("hero", "agent"), ("n2", "count"), ("n3", "count")]);
        let same = lift_instance(&instance(
            PlanStep::new("finish", ["hero", "n3", "n3"]),
            &o,
            &[fact!("geq", "n3", "n3"), fact!("open", "hero")],
            &[fact!("geq", "n3", "n3")],
        ));
        assert!(same.schema.pre.contains(&lifted("geq", &[1, 2])));
        assert!(same.schema.pre.contains(&lifted("geq", &[2, 1])));
        let diff = lift_instance(&instance(
            PlanStep::new("finish", ["hero", "n3", "n2"]),
            &o,
            &[fact!("geq", "n3", "n2"), fact!("geq", "n3", "n3"), fact!("geq", "n2", "n2"), fact!("open", "hero")],
            &[fact!("geq", "n3", "n2"), fact!("geq", "n3", "n3"), fact!("geq", "n2", "n2")],
        ));
        let merged = merge_candidates(&[same, diff]).unwrap();
        assert!(merged.pre.contains(&lifted("geq", &[1, 2])));
        assert!(!merged.pre.contains(&lifted("geq", &[2, 1])));
        assert_eq!(merged.del, [lifted("open", &[0])].into_iter().collect());
    }

    #[test]
    fn empty_input() {
        assert_eq!(learn_domain(&[], "d").unwrap_err(), LearnError::EmptyInput);
    }
}
