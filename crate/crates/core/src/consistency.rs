//! Checks a (possibly hand-edited) domain against logged transitions.
//!
//! A step is consistent when its schema exists, the ground precondition
//! holds in the logged pre-state and `(pre \ del) ∪ add` equals the logged
//! post-state exactly, so frame violations are caught as well.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::pddl::{instantiate, AtomSet, Domain, GroundAtom, State};
use crate::trace::NamedTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FindingKind {
    MissingPrecondition,
    UnexpectedAdd,
    MissingAdd,
    UnexpectedDelete,
    MissingDelete,
    UnknownAction,
    ArityMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ConsistencyFinding {
    pub trace: String,
    pub step: usize,
    pub kind: FindingKind,
    pub action: String,
    pub atoms: Vec<GroundAtom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub traces: usize,
    pub steps: usize,
    pub summary: BTreeMap<FindingKind, usize>,
    pub findings: Vec<ConsistencyFinding>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{trace}: {source}")]
pub struct UnreadableTrace {
    pub trace: String,
    pub source: crate::trace::InconsistentStep,
}

fn check_step(domain: &Domain, id: &str, index: usize, step: &crate::trace::TraceStep, pre: &State, post: &State, out: &mut Vec<ConsistencyFinding>) {
    let finding = |kind, atoms: Vec<GroundAtom>| ConsistencyFinding { trace: id.to_string(), step: index, kind, action: step.action.to_string(), atoms };
    let Some(schema) = domain.action(&step.action.name) else {
        out.push(finding(FindingKind::UnknownAction, vec![]));
        return;
    };
    if schema.arity() != step.action.args.len() {
        out.push(finding(FindingKind::ArityMismatch, vec![]));
        return;
    }
    let ga = instantiate(schema, &step.action.args);
    let missing: Vec<GroundAtom> = ga.pre.difference(pre.atoms()).cloned().collect();
    if !missing.is_empty() {
        out.push(finding(FindingKind::MissingPrecondition, missing));
    }
    let mut predicted: AtomSet = pre.atoms().difference(&ga.del).cloned().collect();
    predicted.extend(ga.add.iter().cloned());

    let mut buckets: BTreeMap<FindingKind, Vec<GroundAtom>> = BTreeMap::new();
    for a in post.atoms().difference(&predicted) {
        let kind = if pre.contains(a) { FindingKind::UnexpectedDelete } else { FindingKind::MissingAdd };
        buckets.entry(kind).or_default().push(a.clone());
    }
    for a in predicted.difference(post.atoms()) {
        let kind = if ga.add.contains(a) && !pre.contains(a) { FindingKind::UnexpectedAdd } else { FindingKind::MissingDelete };
        buckets.entry(kind).or_default().push(a.clone());
    }
    out.extend(buckets.into_iter().map(|(k, atoms)| finding(k, atoms)));
}

/// Reports every inconsistency rather than stopping at the first one.
/// Findings are sorted by trace id, step and kind.
pub fn check_consistency(domain: &Domain, traces: &[NamedTrace]) -> Result<ConsistencyReport, UnreadableTrace> {
    let mut findings = Vec::new();
    let mut steps = 0;
    for t in traces {
        let states = t.trace.reconstruct_states().map_err(|source| UnreadableTrace { trace: t.id.clone(), source })?;
        let with_static = |s: &State| -> State {
            let mut full = s.clone();
            full.extend(t.trace.header.static_facts.iter().cloned());
            full
        };
        for (i, step) in t.trace.steps.iter().enumerate() {
            check_step(domain, &t.id, step.index, step, &with_static(&states[i]), &with_static(&states[i + 1]), &mut findings);
            steps += 1;
        }
    }
    findings.sort();
    let mut summary = BTreeMap::new();
    for f in &findings {
        *summary.entry(f.kind).or_insert(0) += 1;
    }
    Ok(ConsistencyReport {
        verdict: if findings.is_empty() { Verdict::Consistent } else { Verdict::Inconsistent },
        traces: traces.len(),
        steps,
        summary,
        findings,
    })
}
