use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::map::{Direction, GameMap, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "tile")]
pub enum ItemLocation {
    Unspawned,
    Tile(Pos),
    Gone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestStatus {
    Ready,
    Active,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub hero: Pos,
    pub items: BTreeMap<String, ItemLocation>,
    pub quests: BTreeMap<String, QuestStatus>,
    pub inventory: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum GameEvent {
    Move { from: Pos, to: Pos },
    PickUp { item: String, item_type: String, count: usize },
    StartQuest { quest: String, npc: String },
    CompleteQuest { quest: String, npc: String },
}

impl GameEvent {
    pub fn is_move(&self) -> bool {
        matches!(self, GameEvent::Move { .. })
    }
}

impl std::fmt::Display for GameEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GameEvent::Move { from, to } => write!(f, "move {from:?} -> {to:?}"),
            GameEvent::PickUp { item, item_type, count } => write!(f, "pick up {item} ({item_type} x{count})"),
            GameEvent::StartQuest { quest, npc } => write!(f, "start {quest} at {npc}"),
            GameEvent::CompleteQuest { quest, npc } => write!(f, "complete {quest} at {npc}"),
        }
    }
}

impl GameState {
    pub fn initial(map: &GameMap) -> GameState {
        GameState {
            hero: map.start,
            items: map.items.keys().map(|i| (i.clone(), ItemLocation::Unspawned)).collect(),
            quests: map.quests.keys().map(|q| (q.clone(), QuestStatus::Ready)).collect(),
            inventory: map.item_types().into_iter().map(|t| (t.to_string(), 0)).collect(),
        }
    }

    pub fn count(&self, item_type: &str) -> usize {
        self.inventory.get(item_type).copied().unwrap_or(0)
    }

    pub fn all_quests_done(&self) -> bool {
        self.quests.values().all(|s| *s == QuestStatus::Done)
    }

    pub fn apply_event(&mut self, map: &GameMap, ev: &GameEvent) {
        match ev {
            GameEvent::Move { to, .. } => self.hero = *to,
            GameEvent::PickUp { item, item_type, count } => {
                self.items.insert(item.clone(), ItemLocation::Gone);
                self.inventory.insert(item_type.clone(), *count);
            }
            GameEvent::StartQuest { quest, .. } => {
                self.quests.insert(quest.clone(), QuestStatus::Active);
                for it in map.items.values().filter(|it| &it.quest == quest) {
                    self.items.insert(it.id.clone(), ItemLocation::Tile(it.tile));
                }
            }
            GameEvent::CompleteQuest { quest, .. } => {
                self.quests.insert(quest.clone(), QuestStatus::Done);
            }
        }
    }

    /// One arrow-key press. A blocked move leaves the state unchanged and
    /// yields no events.
    pub fn step(&self, map: &GameMap, dir: Direction) -> (GameState, Vec<GameEvent>) {
        let mut s = self.clone();
        let mut events = Vec::new();
        let Some(to) = dir.apply(s.hero).filter(|&to| map.connected(s.hero, to)) else {
            return (s, events);
        };
        let mut emit = |s: &mut GameState, ev: GameEvent| {
            s.apply_event(map, &ev);
            events.push(ev);
        };
        emit(&mut s, GameEvent::Move { from: self.hero, to });

        let here: Vec<String> = s
            .items
            .iter()
            .filter(|(id, loc)| **loc == ItemLocation::Tile(to) && s.quests[&map.items[*id].quest] == QuestStatus::Active)
            .map(|(id, _)| id.clone())
            .collect();
        for id in here {
            let ty = map.items[&id].item_type.clone();
            let count = s.count(&ty) + 1;
            emit(&mut s, GameEvent::PickUp { item: id, item_type: ty, count });
        }
        for (id, q) in &map.quests {
            if s.quests[id] == QuestStatus::Ready && map.near(&q.giver, to) {
                emit(&mut s, GameEvent::StartQuest { quest: id.clone(), npc: q.giver.clone() });
            }
        }
        for (id, q) in &map.quests {
            if s.quests[id] == QuestStatus::Active && map.near(&q.giver, to) && s.count(&q.item_type) >= q.count {
                emit(&mut s, GameEvent::CompleteQuest { quest: id.clone(), npc: q.giver.clone() });
            }
        }
        (s, events)
    }
}
