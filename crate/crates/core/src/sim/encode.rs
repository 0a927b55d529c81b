//! STRIPS view of the simulator: object names, static facts and the
//! dynamic state, matching the hand-written reference domain.

use std::collections::BTreeMap;

use super::map::{GameMap, Pos};
use super::state::{GameEvent, GameState, ItemLocation, QuestStatus};
use crate::fact;
use crate::pddl::{parse_domain, AtomSet, Domain, PlanStep, Problem, State};
use crate::trace::TraceHeader;

pub const HERO: &str = "hero";
pub const REFERENCE_DOMAIN: &str = include_str!("../../data/reference_domain.pddl");

pub fn reference_domain() -> Domain {
    parse_domain(REFERENCE_DOMAIN).expect("bundled reference domain parses")
}

pub fn tile_name((r, c): Pos) -> String {
    format!("t-{r}-{c}")
}

pub fn parse_tile(name: &str) -> Option<Pos> {
    let (r, c) = name.strip_prefix("t-")?.split_once('-')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

pub fn count_name(n: usize) -> String {
    format!("n{n}")
}

pub fn objects(map: &GameMap) -> BTreeMap<String, String> {
    let mut o = BTreeMap::new();
    o.insert(HERO.to_string(), "agent".to_string());
    for t in map.tiles() {
        o.insert(tile_name(t), "tile".to_string());
    }
    for id in map.npcs.keys() {
        o.insert(id.clone(), "npc".to_string());
    }
    for id in map.quests.keys() {
        o.insert(id.clone(), "quest".to_string());
    }
    for id in map.items.keys() {
        o.insert(id.clone(), "item".to_string());
    }
    for ty in map.item_types() {
        o.insert(ty.to_string(), "itemtype".to_string());
    }
    for n in 0..=map.max_count() {
        o.insert(count_name(n), "count".to_string());
    }
    o
}

pub fn static_facts(map: &GameMap) -> AtomSet {
    let mut s = AtomSet::new();
    for &(a, b) in &map.adjacency {
        s.insert(fact!("neighbours", tile_name(a), tile_name(b)));
    }
    for (npc, &tile) in &map.npcs {
        s.insert(fact!("npc-at", npc, tile_name(tile)));
        for t in map.tiles().filter(|&t| map.near(npc, t)) {
            s.insert(fact!("near-npc", npc, tile_name(t)));
        }
    }
    for it in map.items.values() {
        s.insert(fact!("item-type", it.id, it.item_type));
        s.insert(fact!("item-quest", it.id, it.quest));
        s.insert(fact!("item-spawn", it.id, tile_name(it.tile)));
    }
    for q in map.quests.values() {
        s.insert(fact!("quest-giver", q.id, q.giver));
        s.insert(fact!("quest-wants", q.id, q.item_type));
        s.insert(fact!("quest-amount", q.id, count_name(q.count)));
    }
    let k = map.max_count();
    for a in 0..=k {
        if a < k {
            s.insert(fact!("next", count_name(a), count_name(a + 1)));
        }
        for b in 0..=a {
            s.insert(fact!("geq", count_name(a), count_name(b)));
        }
    }
    s
}

/// Items not yet spawned keep their spawn tile; whether they can be picked
/// up follows from their quest being active.
pub fn dynamic_state(map: &GameMap, gs: &GameState) -> State {
    let mut s = State::default();
    s.insert(fact!("at", HERO, tile_name(gs.hero)));
    for (id, loc) in &gs.items {
        match loc {
            ItemLocation::Unspawned => {
                s.insert(fact!("item-at", id, tile_name(map.items[id].tile)));
            }
            ItemLocation::Tile(t) => {
                s.insert(fact!("item-at", id, tile_name(*t)));
            }
            ItemLocation::Gone => {}
        }
    }
    for (id, status) in &gs.quests {
        let p = match status {
            QuestStatus::Ready => "quest-ready",
            QuestStatus::Active => "quest-active",
            QuestStatus::Done => "quest-done",
        };
        s.insert(fact!(p, id));
    }
    for (ty, &n) in &gs.inventory {
        s.insert(fact!("has-count", ty, count_name(n)));
    }
    s
}

/// The ground action logged for `ev`, given the state just before it.
pub fn event_step(map: &GameMap, before: &GameState, ev: &GameEvent) -> PlanStep {
    let here = tile_name(before.hero);
    match ev {
        GameEvent::Move { from, to } => PlanStep::new("move", [HERO.to_string(), tile_name(*from), tile_name(*to)]),
        GameEvent::PickUp { item, item_type, count } => PlanStep::new(
            "pick-up-item",
            [HERO.to_string(), item.clone(), here, item_type.clone(), map.items[item].quest.clone(), count_name(count - 1), count_name(*count)],
        ),
        GameEvent::StartQuest { quest, npc } => PlanStep::new("start-quest", [HERO.to_string(), quest.clone(), npc.clone(), here]),
        GameEvent::CompleteQuest { quest, npc } => {
            let q = &map.quests[quest];
            PlanStep::new(
                "complete-quest",
                [HERO.to_string(), quest.clone(), npc.clone(), here, q.item_type.clone(), count_name(before.count(&q.item_type)), count_name(q.count)],
            )
        }
    }
}

pub fn trace_header(map: &GameMap) -> TraceHeader {
    TraceHeader::new(objects(map), static_facts(map), dynamic_state(map, &GameState::initial(map)))
}

/// Every quest done.
pub fn all_quests_goal(map: &GameMap) -> AtomSet {
    map.quests.keys().map(|q| fact!("quest-done", q)).collect()
}

/// Ground-truth planning problem for the map's initial state.
pub fn export_problem(map: &GameMap, goal: Option<AtomSet>) -> Problem {
    let header = trace_header(map);
    let mut init = header.init;
    init.extend(header.static_facts);
    Problem { name: map.name.clone(), domain: "rpg".to_string(), objects: header.objects, init, goal: goal.unwrap_or_else(|| all_quests_goal(map)) }
}
