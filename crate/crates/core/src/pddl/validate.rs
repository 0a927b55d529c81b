use serde::Serialize;

use super::semantics::{apply, instantiate, missing_preconditions};
use super::{Domain, GroundAtom, Plan, Problem, State, OBJECT_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("step {index}: unknown action `{name}`")]
    UnknownAction { index: usize, name: String },
    #[error("step {index}: `{name}` takes {expected} arguments, found {found}")]
    ArityMismatch { index: usize, name: String, expected: usize, found: usize },
    #[error("step {index}: undeclared object `{object}`")]
    UndeclaredObject { index: usize, object: String },
    #[error("step {index}: `{object}` is not of type `{expected}`")]
    TypeMismatch { index: usize, object: String, expected: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Precondition,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationFailure {
    /// Index of the step that could not be applied, or `plan.len()` when
    /// every step applied but the goal does not hold.
    pub index: usize,
    pub kind: FailureKind,
    pub missing: Vec<GroundAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub failure: Option<ValidationFailure>,
    #[serde(skip)]
    pub final_state: State,
}

pub fn validate_plan(d: &Domain, p: &Problem, plan: &Plan) -> Result<ValidationReport, PlanError> {
    let mut state = p.init.clone();
    for (index, step) in plan.steps().iter().enumerate() {
        let schema = d.action(&step.name).ok_or_else(|| PlanError::UnknownAction { index, name: step.name.clone() })?;
        if schema.arity() != step.args.len() {
            return Err(PlanError::ArityMismatch { index, name: step.name.clone(), expected: schema.arity(), found: step.args.len() });
        }
        for (param, obj) in schema.params.iter().zip(&step.args) {
            let ty = p.objects.get(obj).ok_or_else(|| PlanError::UndeclaredObject { index, object: obj.clone() })?;
            if param.ty != OBJECT_TYPE && &param.ty != ty {
                return Err(PlanError::TypeMismatch { index, object: obj.clone(), expected: param.ty.clone() });
            }
        }
        let action = instantiate(schema, &step.args);
        match apply(&state, &action) {
            Ok(next) => state = next,
            Err(_) => {
                let missing = missing_preconditions(&state, &action);
                return Ok(ValidationReport {
                    valid: false,
                    failure: Some(ValidationFailure { index, kind: FailureKind::Precondition, missing }),
                    final_state: state,
                });
            }
        }
    }
    let missing: Vec<GroundAtom> = p.goal.difference(state.atoms()).cloned().collect();
    let failure = (!missing.is_empty()).then(|| ValidationFailure { index: plan.len(), kind: FailureKind::Goal, missing });
    Ok(ValidationReport { valid: failure.is_none(), failure, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact;
    use crate::pddl::{parse_domain, parse_problem, PlanStep};

    fn corridor() -> (Domain, Problem) {
        let d = parse_domain(
            "(define (domain g) (:types agent tile) (:predicates (at ?h - agent ?t - tile) (neighbours ?a ?b - tile))
             (:action move :parameters (?h - agent ?from ?to - tile)
               :precondition (and (at ?h ?from) (neighbours ?from ?to))
               :effect (and (at ?h ?to) (not (at ?h ?from)))))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem c) (:domain g) (:objects hero - agent t1 t2 t3 - tile)
              (:init (at hero t1) (neighbours t1 t2) (neighbours t2 t1) (neighbours t2 t3) (neighbours t3 t2))
              (:goal (at hero t3)))",
        )
        .unwrap();
        (d, p)
    }

    fn mv(a: &str, b: &str) -> PlanStep {
        PlanStep::new("move", ["hero", a, b])
    }

    #[test]
    fn empty_plan_with_satisfied_goal() {
        let (d, mut p) = corridor();
        p.goal = [fact!("at", "hero", "t1")].into_iter().collect();
        assert!(validate_plan(&d, &p, &Plan::default()).unwrap().valid);
    }

    #[test]
    fn valid_and_broken_plans() {
        let (d, p) = corridor();
        let plan: Plan = [mv("t1", "t2"), mv("t2", "t3")].into_iter().collect();
        let r = validate_plan(&d, &p, &plan).unwrap();
        assert!(r.valid);
        assert!(r.final_state.contains(&fact!("at", "hero", "t3")));

        let broken: Plan = [mv("t2", "t3")].into_iter().collect();
        let r = validate_plan(&d, &p, &broken).unwrap();
        assert!(!r.valid);
        let f = r.failure.unwrap();
        assert_eq!((f.index, f.kind), (0, FailureKind::Precondition));
        assert_eq!(f.missing, vec![fact!("at", "hero", "t2")]);

        let short: Plan = [mv("t1", "t2")].into_iter().collect();
        let f = validate_plan(&d, &p, &short).unwrap().failure.unwrap();
        assert_eq!((f.index, f.kind), (1, FailureKind::Goal));
    }

    #[test]
    fn unknown_action_is_an_error() {
        let (d, p) = corridor();
        let plan: Plan = [PlanStep::new("jump", ["hero"])].into_iter().collect();
        assert!(matches!(validate_plan(&d, &p, &plan), Err(PlanError::UnknownAction { index: 0, .. })));
    }
}
