//! Gameplay traces in the `gtrace-1` JSON Lines format.
//!
//! Line 1 is the header (objects, static facts, initial dynamic state); each
//! further line is one step: the action the game performed and either the
//! full dynamic state afterwards or a delta against the previous state.

mod io;
mod wellformed;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pddl::{AtomSet, GroundAtom, PlanStep, State};

pub use io::{load_trace_dir, read_trace, read_trace_str, write_trace, write_trace_string, TraceError};
pub use wellformed::{check_wellformed, Finding, FindingKind, WellformednessReport};

pub const FORMAT_TAG: &str = "gtrace-1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub objects: BTreeMap<String, String>,
    #[serde(rename = "static")]
    pub static_facts: AtomSet,
    pub init: State,
}

impl TraceHeader {
    pub fn new(objects: BTreeMap<String, String>, static_facts: AtomSet, init: State) -> Self {
        TraceHeader { format: FORMAT_TAG.to_string(), objects, static_facts, init }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delta {
    pub add: AtomSet,
    pub del: AtomSet,
}

impl Delta {
    pub fn between(before: &State, after: &State) -> Self {
        Delta { add: after.atoms().difference(before.atoms()).cloned().collect(), del: before.atoms().difference(after.atoms()).cloned().collect() }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.add.iter().chain(&self.del)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    #[serde(rename = "step")]
    pub index: usize,
    pub action: PlanStep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Delta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<State>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
}

/// A trace together with the name it is reported under (usually its file
/// name).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedTrace {
    pub id: String,
    pub trace: Trace,
}

impl NamedTrace {
    pub fn new(id: impl Into<String>, trace: Trace) -> Self {
        NamedTrace { id: id.into(), trace }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {index}: {reason}")]
pub struct InconsistentStep {
    pub index: usize,
    pub reason: String,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Trace { header, steps: Vec::new() }
    }

    /// Full dynamic states: `[init, after step 0, after step 1, ...]`.
    pub fn reconstruct_states(&self) -> Result<Vec<State>, InconsistentStep> {
        reconstruct_states(self)
    }

    /// Converts every step to the delta form (dropping full states).
    pub fn to_delta_form(&self) -> Result<Trace, InconsistentStep> {
        let states = self.reconstruct_states()?;
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| TraceStep { index: s.index, action: s.action.clone(), delta: Some(Delta::between(&states[i], &states[i + 1])), state: None })
            .collect();
        Ok(Trace { header: self.header.clone(), steps })
    }

    pub fn truncated(&self, len: usize) -> Trace {
        Trace { header: self.header.clone(), steps: self.steps[..len.min(self.steps.len())].to_vec() }
    }
}

pub(crate) fn advance(prev: &State, step: &TraceStep) -> Result<State, InconsistentStep> {
    let err = |reason: String| InconsistentStep { index: step.index, reason };
    let from_delta = match &step.delta {
        Some(delta) => {
            if let Some(a) = delta.add.intersection(&delta.del).next() {
                return Err(err(format!("{a} is both added and deleted")));
            }
            if let Some(a) = delta.del.iter().find(|a| !prev.contains(a)) {
                return Err(err(format!("deleted atom {a} is absent from the previous state")));
            }
            let mut next = prev.clone();
            for a in &delta.del {
                next.remove(a);
            }
            next.extend(delta.add.iter().cloned());
            Some(next)
        }
        None => None,
    };
    match (from_delta, &step.state) {
        (Some(d), Some(s)) if &d != s => {
            let extra: Vec<String> = s.atoms().symmetric_difference(d.atoms()).map(ToString::to_string).collect();
            Err(err(format!("full state contradicts the delta on {}", extra.join(", "))))
        }
        (Some(d), _) => Ok(d),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Err(err("step carries neither `delta` nor `state`".to_string())),
    }
}

pub fn reconstruct_states(t: &Trace) -> Result<Vec<State>, InconsistentStep> {
    let mut states = Vec::with_capacity(t.steps.len() + 1);
    states.push(t.header.init.clone());
    for step in &t.steps {
        let next = advance(states.last().expect("non-empty"), step)?;
        states.push(next);
    }
    Ok(states)
}
