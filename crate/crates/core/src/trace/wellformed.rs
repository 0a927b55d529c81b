use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{advance, Trace};
use crate::pddl::GroundAtom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    ArityMismatch,
    UndeclaredObject,
    NonConsecutiveIndex,
    StaticPredicateMutated,
    StaticDynamicOverlap,
    InconsistentStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    /// `None` for header findings.
    pub step: Option<usize>,
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WellformednessReport {
    pub findings: Vec<Finding>,
}

impl WellformednessReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, step: Option<usize>, kind: FindingKind, message: String) {
        self.findings.push(Finding { step, kind, message });
    }
}

struct ArityTracker {
    seen: BTreeMap<String, (usize, Option<usize>)>,
}

impl ArityTracker {
    fn check(&mut self, what: &str, name: &str, arity: usize, step: Option<usize>, report: &mut WellformednessReport) {
        match self.seen.get(name) {
            None => {
                self.seen.insert(name.to_string(), (arity, step));
            }
            Some(&(first, at)) if first != arity => {
                let origin = match at {
                    Some(i) => format!("step {i}"),
                    None => "the header".to_string(),
                };
                report.push(step, FindingKind::ArityMismatch, format!("{what} `{name}` used with {arity} arguments, but with {first} at {origin}"));
            }
            Some(_) => {}
        }
    }
}

pub fn check_wellformed(t: &Trace) -> WellformednessReport {
    let mut report = WellformednessReport::default();
    let header = &t.header;
    let mut preds = ArityTracker { seen: BTreeMap::new() };
    let mut actions = ArityTracker { seen: BTreeMap::new() };

    let static_preds: BTreeSet<&str> = header.static_facts.iter().map(|a| a.predicate.as_str()).collect();
    let init_preds: BTreeSet<&str> = header.init.iter().map(|a| a.predicate.as_str()).collect();
    for p in static_preds.intersection(&init_preds) {
        report.push(None, FindingKind::StaticDynamicOverlap, format!("predicate `{p}` appears in both `static` and `init`"));
    }

    let check_atom = |a: &GroundAtom, step: Option<usize>, preds: &mut ArityTracker, report: &mut WellformednessReport| {
        preds.check("predicate", &a.predicate, a.args.len(), step, report);
        for o in a.objects() {
            if !header.objects.contains_key(o) {
                report.push(step, FindingKind::UndeclaredObject, format!("object `{o}` in {a} is not declared"));
            }
        }
    };
    for a in header.static_facts.iter().chain(header.init.iter()) {
        check_atom(a, None, &mut preds, &mut report);
    }

    let mut current = Some(header.init.clone());
    for (pos, step) in t.steps.iter().enumerate() {
        let at = Some(step.index);
        if step.index != pos {
            report.push(at, FindingKind::NonConsecutiveIndex, format!("step at position {pos} is numbered {}", step.index));
        }
        actions.check("action", &step.action.name, step.action.args.len(), at, &mut report);
        for o in &step.action.args {
            if !header.objects.contains_key(o) {
                report.push(at, FindingKind::UndeclaredObject, format!("action argument `{o}` is not declared"));
            }
        }
        let touched: Vec<&GroundAtom> = step.delta.iter().flat_map(|d| d.atoms()).chain(step.state.iter().flat_map(|s| s.iter())).collect();
        let mut mutated = BTreeSet::new();
        for a in touched {
            check_atom(a, at, &mut preds, &mut report);
            if static_preds.contains(a.predicate.as_str()) && mutated.insert(a.clone()) {
                report.push(at, FindingKind::StaticPredicateMutated, format!("static predicate mutated: {a}"));
            }
        }
        current = match current.as_ref().map(|prev| advance(prev, step)) {
            Some(Ok(next)) => Some(next),
            Some(Err(e)) => {
                report.push(at, FindingKind::InconsistentStep, e.reason);
                step.state.clone()
            }
            None => step.state.clone(),
        };
    }
    report
}
