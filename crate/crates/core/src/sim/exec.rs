//! Plans as test scripts: only moves are issued, as arrow presses; every
//! other plan step is a checkpoint that the game must have produced on its
//! own by the time the plan reaches it.

use serde::Serialize;

use super::encode::{parse_tile, tile_name};
use super::map::{Direction, GameMap};
use super::record::Session;
use super::state::{GameEvent, GameState};
use crate::pddl::{Plan, PlanStep};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MalformedPlan {
    #[error("step {index}: unknown action `{name}`")]
    UnknownAction { index: usize, name: String },
    #[error("step {index}: {message}")]
    BadArguments { index: usize, message: String },
    #[error("step {index}: {from} and {to} are not adjacent tiles")]
    NotAdjacent { index: usize, from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum ExecutionOutcome {
    Success,
    Divergence { index: usize, expected: String, observed: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionReport {
    #[serde(flatten)]
    pub outcome: ExecutionOutcome,
    pub commands: Vec<Direction>,
    /// Game events no plan step asked for.
    pub unplanned_events: Vec<GameEvent>,
    pub final_state: GameState,
    #[serde(skip)]
    pub trace: Trace,
}

impl ExecutionReport {
    pub fn is_success(&self) -> bool {
        self.outcome == ExecutionOutcome::Success
    }
}

enum Instr {
    Move(Direction, (usize, usize)),
    Expect(&'static str, String),
}

fn compile(map: &GameMap, index: usize, step: &PlanStep) -> Result<Instr, MalformedPlan> {
    let arity = |n: usize| {
        if step.args.len() == n {
            Ok(())
        } else {
            Err(MalformedPlan::BadArguments { index, message: format!("`{}` takes {n} arguments", step.name) })
        }
    };
    let known = |what: &str, id: &String, ok: bool| {
        if ok {
            Ok(id.clone())
        } else {
            Err(MalformedPlan::BadArguments { index, message: format!("unknown {what} `{id}`") })
        }
    };
    match step.name.as_str() {
        "move" => {
            arity(3)?;
            let (from, to) = (&step.args[1], &step.args[2]);
            let not_adjacent = || MalformedPlan::NotAdjacent { index, from: from.clone(), to: to.clone() };
            let (Some(f), Some(t)) = (parse_tile(from), parse_tile(to)) else { return Err(not_adjacent()) };
            if !map.is_walkable(f) || !map.is_walkable(t) {
                return Err(not_adjacent());
            }
            let d = Direction::between(f, t).ok_or_else(not_adjacent)?;
            Ok(Instr::Move(d, f))
        }
        "pick-up-item" => {
            arity(7)?;
            Ok(Instr::Expect("pick-up-item", known("item", &step.args[1], map.items.contains_key(&step.args[1]))?))
        }
        "start-quest" | "complete-quest" => {
            arity(if step.name == "start-quest" { 4 } else { 7 })?;
            let name = if step.name == "start-quest" { "start-quest" } else { "complete-quest" };
            Ok(Instr::Expect(name, known("quest", &step.args[1], map.quests.contains_key(&step.args[1]))?))
        }
        other => Err(MalformedPlan::UnknownAction { index, name: other.to_string() }),
    }
}

fn key(ev: &GameEvent) -> Option<(&'static str, &str)> {
    match ev {
        GameEvent::Move { .. } => None,
        GameEvent::PickUp { item, .. } => Some(("pick-up-item", item)),
        GameEvent::StartQuest { quest, .. } => Some(("start-quest", quest)),
        GameEvent::CompleteQuest { quest, .. } => Some(("complete-quest", quest)),
    }
}

pub fn execute_plan(map: &GameMap, plan: &Plan) -> Result<ExecutionReport, MalformedPlan> {
    let program = plan.0.iter().enumerate().map(|(i, s)| compile(map, i, s)).collect::<Result<Vec<_>, _>>()?;
    let mut session = Session::new(map);
    let mut commands = Vec::new();
    let mut observed: Vec<(GameEvent, bool)> = Vec::new();
    let mut last: Vec<GameEvent> = Vec::new();
    let mut outcome = ExecutionOutcome::Success;
    let describe = |evs: &[GameEvent]| {
        if evs.is_empty() {
            "no events".to_string()
        } else {
            evs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        }
    };
    for (index, (instr, step)) in program.iter().zip(&plan.0).enumerate() {
        match instr {
            Instr::Move(d, from) => {
                if session.state.hero != *from {
                    outcome =
                        ExecutionOutcome::Divergence { index, expected: step.to_string(), observed: format!("hero is at {}", tile_name(session.state.hero)) };
                    break;
                }
                commands.push(*d);
                last = session.command(map, *d);
                if last.is_empty() {
                    outcome = ExecutionOutcome::Divergence { index, expected: step.to_string(), observed: "move blocked".to_string() };
                    break;
                }
                observed.extend(last.iter().filter(|e| !e.is_move()).map(|e| (e.clone(), false)));
            }
            Instr::Expect(kind, id) => {
                let hit = observed.iter_mut().find(|(e, used)| !*used && key(e) == Some((kind, id.as_str())));
                match hit {
                    Some((_, used)) => *used = true,
                    None => {
                        outcome = ExecutionOutcome::Divergence { index, expected: step.to_string(), observed: describe(&last) };
                        break;
                    }
                }
            }
        }
    }
    Ok(ExecutionReport {
        outcome,
        commands,
        unplanned_events: observed.into_iter().filter(|(_, used)| !used).map(|(e, _)| e).collect(),
        final_state: session.state,
        trace: session.trace,
    })
}
