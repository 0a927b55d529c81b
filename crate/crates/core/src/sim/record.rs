use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{dynamic_state, event_step, trace_header};
use super::map::{Direction, GameMap, OverrideKind, Pos};
use super::state::{GameEvent, GameState, ItemLocation, QuestStatus};
use crate::trace::{Delta, Trace, TraceStep};

/// A running game together with the trace logged so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub state: GameState,
    pub trace: Trace,
}

impl Session {
    pub fn new(map: &GameMap) -> Session {
        Session { state: GameState::initial(map), trace: Trace::new(trace_header(map)) }
    }

    /// Applies one command and logs one trace step per resulting event.
    pub fn command(&mut self, map: &GameMap, dir: Direction) -> Vec<GameEvent> {
        let (_, events) = self.state.step(map, dir);
        for ev in &events {
            let before = self.state.clone();
            let action = event_step(map, &before, ev);
            self.state.apply_event(map, ev);
            let delta = Delta::between(&dynamic_state(map, &before), &dynamic_state(map, &self.state));
            self.trace.steps.push(TraceStep { index: self.trace.steps.len(), action, delta: Some(delta), state: None });
        }
        events
    }

    pub fn run(&mut self, map: &GameMap, dirs: &[Direction]) -> Vec<GameEvent> {
        dirs.iter().flat_map(|&d| self.command(map, d)).collect()
    }
}

pub fn record_session(map: &GameMap, commands: &[Direction]) -> Trace {
    let mut s = Session::new(map);
    s.run(map, commands);
    s.trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    /// Starts, fulfils and completes every quest in id order, then crosses
    /// every one-way edge that can still be reached.
    Coverage,
    /// Uniformly random arrow presses.
    Random { seed: u64, steps: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("coverage impossible: {0}")]
pub struct CoverageImpossible(pub String);

fn go(map: &GameMap, s: &mut Session, goal: impl Fn(Pos) -> bool, what: &str) -> Result<(), CoverageImpossible> {
    let route = map.route(s.state.hero, goal).ok_or_else(|| CoverageImpossible(format!("no route from {:?} to {what}", s.state.hero)))?;
    s.run(map, &route);
    Ok(())
}

pub fn scripted_playthrough(map: &GameMap, policy: Policy) -> Result<Trace, CoverageImpossible> {
    let mut s = Session::new(map);
    match policy {
        Policy::Random { seed, steps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..steps {
                s.command(map, Direction::ALL[rng.random_range(0..4)]);
            }
        }
        Policy::Coverage => {
            for (id, q) in &map.quests {
                if s.state.quests[id] == QuestStatus::Ready {
                    go(map, &mut s, |t| map.near(&q.giver, t), &format!("quest giver `{}`", q.giver))?;
                }
                while s.state.quests[id] == QuestStatus::Active && s.state.count(&q.item_type) < q.count {
                    let targets: Vec<Pos> = s
                        .state
                        .items
                        .iter()
                        .filter(|(i, _)| map.items[*i].quest == *id)
                        .filter_map(|(_, loc)| match loc {
                            ItemLocation::Tile(t) => Some(*t),
                            _ => None,
                        })
                        .collect();
                    if targets.is_empty() {
                        return Err(CoverageImpossible(format!("quest `{id}` ran out of items")));
                    }
                    go(map, &mut s, |t| targets.contains(&t), &format!("the items of `{id}`"))?;
                }
                if s.state.quests[id] == QuestStatus::Active {
                    go(map, &mut s, |t| map.near(&q.giver, t), &format!("quest giver `{}`", q.giver))?;
                }
                if s.state.quests[id] != QuestStatus::Done {
                    return Err(CoverageImpossible(format!("quest `{id}` could not be completed")));
                }
            }
            let mut one_way: Vec<(Pos, Pos)> = map.source.overrides.iter().filter(|o| o.kind == OverrideKind::OneWay).map(|o| (o.from, o.to)).collect();
            one_way.sort();
            for (from, to) in one_way {
                if s.state.hero != from && map.route(s.state.hero, |t| t == from).is_none() {
                    continue;
                }
                if s.state.hero != from {
                    go(map, &mut s, |t| t == from, "a one-way edge")?;
                }
                s.command(map, Direction::between(from, to).expect("overrides join adjacent tiles"));
            }
        }
    }
    Ok(s.trace)
}
