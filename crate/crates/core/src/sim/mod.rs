//! Headless grid RPG: a hero walks a tile map, quests start and complete
//! automatically near their NPC, and quest items are picked up by walking
//! over them.

mod encode;
mod exec;
mod map;
mod record;
mod state;

pub use encode::{
    all_quests_goal, count_name, dynamic_state, event_step, export_problem, objects, parse_tile, reference_domain, static_facts, tile_name, trace_header, HERO,
    REFERENCE_DOMAIN,
};
pub use exec::{execute_plan, ExecutionOutcome, ExecutionReport, MalformedPlan};
pub use map::{load_map, parse_map, Cell, Direction, GameMap, ItemSpec, MapError, MapFile, NpcSpec, Override, OverrideKind, Pos, QuestSpec, MAP_FORMAT};
pub use record::{record_session, scripted_playthrough, CoverageImpossible, Policy, Session};
pub use state::{GameEvent, GameState, ItemLocation, QuestStatus};

/// Bundled maps.
pub mod maps {
    pub const DEMO: &str = include_str!("../../data/maps/demo.json");
    pub const TRAP: &str = include_str!("../../data/maps/trap.json");
    pub const SMALL: &str = include_str!("../../data/maps/small.json");

    pub fn demo() -> super::GameMap {
        super::parse_map(DEMO).expect("bundled demo map is valid")
    }

    pub fn trap() -> super::GameMap {
        super::parse_map(TRAP).expect("bundled trap map is valid")
    }

    pub fn small() -> super::GameMap {
        super::parse_map(SMALL).expect("bundled small map is valid")
    }
}
