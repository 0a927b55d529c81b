//! Test scenarios built on the planner: goal templates instantiated into
//! problems, dead-end scans from random reachable states, and proofs that
//! no plan is shorter than a bound.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pddl::{AtomSet, Domain, GroundAtom, Plan, PlanStep, Problem, State, OBJECT_TYPE};
use crate::planner::{self, Limits, Outcome, SearchStats, Task, TaskError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateVar {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    All,
    Sampled { k: usize, seed: u64 },
}

/// Goal patterns are atoms written as arrays; `?name` entries refer to
/// template variables, anything else is an object constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalTemplate {
    pub name: String,
    #[serde(default)]
    pub variables: Vec<TemplateVar>,
    pub goal: Vec<Vec<String>>,
    #[serde(default = "all_mode")]
    pub mode: Mode,
}

fn all_mode() -> Mode {
    Mode::All
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("variable `{0}` does not occur in the goal")]
    UnusedVariable(String),
    #[error("`{0}` is not a declared template variable")]
    UndeclaredVariable(String),
    #[error("variable `{variable}` has unknown type `{ty}`")]
    UnknownType { variable: String, ty: String },
    #[error("goal pattern {0:?} names an undeclared predicate or has the wrong arity")]
    BadPattern(Vec<String>),
    #[error("goal pattern mentions unknown object `{0}`")]
    UnknownObject(String),
    #[error("no objects of type `{ty}` for variable `{variable}`")]
    NoBindings { variable: String, ty: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StartState {
    pub seed: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub problem: Problem,
    pub binding: BTreeMap<String, String>,
    pub start: Option<StartState>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioBatch {
    pub template: String,
    pub scenarios: Vec<Scenario>,
}

fn var_name(s: &str) -> String {
    s.trim_start_matches('?').to_ascii_lowercase()
}

impl GoalTemplate {
    pub fn from_json(text: &str) -> Result<GoalTemplate, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn check(&self, d: &Domain, base: &Problem) -> Result<(), TemplateError> {
        let vars: Vec<String> = self.variables.iter().map(|v| var_name(&v.name)).collect();
        for v in &self.variables {
            if v.ty != OBJECT_TYPE && !d.types.contains(&v.ty) {
                return Err(TemplateError::UnknownType { variable: v.name.clone(), ty: v.ty.clone() });
            }
        }
        for pattern in &self.goal {
            let Some((pred, args)) = pattern.split_first() else {
                return Err(TemplateError::BadPattern(pattern.clone()));
            };
            if d.predicates.get(pred).is_none_or(|p| p.params.len() != args.len()) {
                return Err(TemplateError::BadPattern(pattern.clone()));
            }
            for a in args {
                if a.starts_with('?') {
                    if !vars.contains(&var_name(a)) {
                        return Err(TemplateError::UndeclaredVariable(a.clone()));
                    }
                } else if !base.objects.contains_key(a) {
                    return Err(TemplateError::UnknownObject(a.clone()));
                }
            }
        }
        for (v, name) in self.variables.iter().zip(&vars) {
            if !self.goal.iter().flatten().any(|a| a.starts_with('?') && var_name(a) == *name) {
                return Err(TemplateError::UnusedVariable(v.name.clone()));
            }
        }
        Ok(())
    }

    /// Every type-correct binding in lexicographic order of object names.
    pub fn bindings(&self, base: &Problem) -> Result<Vec<BTreeMap<String, String>>, TemplateError> {
        let mut domains = Vec::new();
        for v in &self.variables {
            let objs: Vec<String> = base.objects_of_type(&v.ty).map(str::to_string).collect();
            if objs.is_empty() {
                return Err(TemplateError::NoBindings { variable: v.name.clone(), ty: v.ty.clone() });
            }
            domains.push(objs);
        }
        let mut out = vec![BTreeMap::new()];
        for (v, objs) in self.variables.iter().zip(&domains) {
            out = out
                .into_iter()
                .flat_map(|b| {
                    objs.iter().map(move |o| {
                        let mut b = b.clone();
                        b.insert(var_name(&v.name), o.clone());
                        b
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn goal_for(&self, binding: &BTreeMap<String, String>) -> AtomSet {
        self.goal
            .iter()
            .map(|pattern| {
                let args = pattern[1..].iter().map(|a| if a.starts_with('?') { binding[&var_name(a)].clone() } else { a.clone() });
                GroundAtom::new(pattern[0].clone(), args)
            })
            .collect()
    }
}

/// Problems for the template's bindings, all starting from `base.init`.
pub fn instantiate_templates(d: &Domain, base: &Problem, t: &GoalTemplate) -> Result<ScenarioBatch, TemplateError> {
    instantiate_from(d, base, t, None)
}

/// As [`instantiate_templates`], starting from a random-walk state when
/// `start` is given.
pub fn instantiate_from(d: &Domain, base: &Problem, t: &GoalTemplate, start: Option<(State, StartState)>) -> Result<ScenarioBatch, TemplateError> {
    t.check(d, base)?;
    let all = t.bindings(base)?;
    let chosen: Vec<BTreeMap<String, String>> = match t.mode {
        Mode::All => all,
        Mode::Sampled { k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = rand::seq::index::sample(&mut rng, all.len(), k.min(all.len())).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| all[i].clone()).collect()
        }
    };
    let scenarios = chosen
        .into_iter()
        .enumerate()
        .map(|(i, binding)| {
            let mut problem = base.clone();
            problem.name = format!("{}-{}", t.name.to_ascii_lowercase().replace(' ', "-"), i + 1);
            problem.goal = t.goal_for(&binding);
            if let Some((init, _)) = &start {
                problem.init = init.clone();
            }
            Scenario { problem, binding, start: start.as_ref().map(|(_, s)| s.clone()) }
        })
        .collect();
    Ok(ScenarioBatch { template: t.name.clone(), scenarios })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum DeadEndVerdict {
    DeadEnd,
    Ok,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadEndSample {
    pub sample: usize,
    pub seed: u64,
    pub verdict: DeadEndVerdict,
    /// Length of a shortest plan from the sampled state.
    pub distance: Option<usize>,
    /// The walk that produced the state, for replay.
    pub walk: Vec<PlanStep>,
    /// Only kept for dead-ends.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<State>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadEndReport {
    pub samples: usize,
    pub walk_steps: usize,
    pub seed: u64,
    pub dead_ends: usize,
    pub ok: usize,
    pub unknown: usize,
    pub results: Vec<DeadEndSample>,
}

/// Sample `i` walks `walk_steps` random actions with seed `seed + i` and
/// then searches the whole reachable space for `goal`.
pub fn dead_end_scan(
    d: &Domain,
    p: &Problem,
    goal: &AtomSet,
    samples: usize,
    walk_steps: usize,
    seed: u64,
    limits: Limits,
) -> Result<DeadEndReport, TaskError> {
    let problem = Problem { goal: goal.clone(), ..p.clone() };
    let task = Task::new(d, &problem)?;
    let mut results = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = seed.wrapping_add(i as u64);
        let walk = planner::walk_task(&task, walk_steps, s);
        let from = task.with_init(&walk.state);
        let r = planner::plan_optimal_task(&from, None, limits);
        let verdict = match r.outcome {
            Outcome::Plan { .. } => DeadEndVerdict::Ok,
            Outcome::ProvedNoPlan | Outcome::ProvedNoPlanWithinBound { .. } => DeadEndVerdict::DeadEnd,
            Outcome::ResourceLimit { .. } => DeadEndVerdict::Unknown,
        };
        log::debug!("sample {i} (seed {s}): {verdict:?} after {} expansions", r.stats.expanded);
        if let Some(plan) = r.plan() {
            let at = Problem { init: walk.state.clone(), ..problem.clone() };
            debug_assert!(crate::pddl::validate_plan(d, &at, plan).is_ok_and(|v| v.valid));
        }
        results.push(DeadEndSample {
            sample: i,
            seed: s,
            verdict,
            distance: r.cost(),
            walk: walk.actions,
            state: (verdict == DeadEndVerdict::DeadEnd).then_some(walk.state),
            stats: r.stats,
        });
    }
    let count = |v| results.iter().filter(|r| r.verdict == v).count();
    Ok(DeadEndReport {
        samples,
        walk_steps,
        seed,
        dead_ends: count(DeadEndVerdict::DeadEnd),
        ok: count(DeadEndVerdict::Ok),
        unknown: count(DeadEndVerdict::Unknown),
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum ShortcutVerdict {
    NoShortcut,
    ShortcutFound { witness: Plan, cost: usize },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortcutReport {
    pub bound: usize,
    #[serde(flatten)]
    pub verdict: ShortcutVerdict,
    pub stats: SearchStats,
}

/// Whether some plan shorter than `bound` exists.
pub fn shortcut_check(d: &Domain, p: &Problem, bound: usize, limits: Limits) -> Result<ShortcutReport, TaskError> {
    if bound == 0 {
        return Ok(ShortcutReport { bound, verdict: ShortcutVerdict::NoShortcut, stats: SearchStats::default() });
    }
    let r = planner::plan_optimal(d, p, Some(bound - 1), limits)?;
    let verdict = match r.outcome {
        Outcome::Plan { plan, cost } => ShortcutVerdict::ShortcutFound { witness: plan, cost },
        Outcome::ProvedNoPlan | Outcome::ProvedNoPlanWithinBound { .. } => ShortcutVerdict::NoShortcut,
        Outcome::ResourceLimit { reason } => ShortcutVerdict::Inconclusive { reason },
    };
    Ok(ShortcutReport { bound, verdict, stats: r.stats })
}
