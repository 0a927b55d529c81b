//! `gmap-1` map files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MAP_FORMAT: &str = "gmap-1";

/// `(row, column)`, row 0 at the top.
pub type Pos = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn apply(self, (r, c): Pos) -> Option<Pos> {
        match self {
            Direction::Up => Some((r.checked_sub(1)?, c)),
            Direction::Down => Some((r + 1, c)),
            Direction::Left => Some((r, c.checked_sub(1)?)),
            Direction::Right => Some((r, c + 1)),
        }
    }

    pub fn between(from: Pos, to: Pos) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.apply(from) == Some(to))
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "up" | "u" => Ok(Direction::Up),
            "down" | "d" => Ok(Direction::Down),
            "left" | "l" => Ok(Direction::Left),
            "right" | "r" => Ok(Direction::Right),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Wall,
    Floor,
    Start,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverrideKind {
    /// Only `from -> to` remains.
    OneWay,
    /// Neither direction remains.
    Block,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpcSpec {
    pub id: String,
    pub tile: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestSpec {
    pub id: String,
    pub giver: String,
    pub item_type: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemSpec {
    pub id: String,
    #[serde(rename = "type")]
    pub item_type: String,
    pub tile: Pos,
    pub quest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub from: Pos,
    pub to: Pos,
    pub kind: OverrideKind,
}

/// The file as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub format: String,
    pub name: String,
    pub legend: BTreeMap<char, Cell>,
    pub grid: Vec<String>,
    #[serde(default)]
    pub npcs: Vec<NpcSpec>,
    #[serde(default)]
    pub quests: Vec<QuestSpec>,
    #[serde(default)]
    pub items: Vec<ItemSpec>,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("malformed map file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl MapError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        MapError::Invalid { path: path.into(), message: message.into() }
    }

    /// Field path of a validation error.
    pub fn path(&self) -> Option<&str> {
        match self {
            MapError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// A validated map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameMap {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    walkable: Vec<bool>,
    /// Directed adjacency between walkable tiles.
    pub adjacency: BTreeSet<(Pos, Pos)>,
    pub start: Pos,
    pub npcs: BTreeMap<String, Pos>,
    pub quests: BTreeMap<String, QuestSpec>,
    pub items: BTreeMap<String, ItemSpec>,
    pub source: MapFile,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

pub fn load_map(path: &Path) -> Result<GameMap, MapError> {
    parse_map(&std::fs::read_to_string(path)?)
}

pub fn parse_map(text: &str) -> Result<GameMap, MapError> {
    GameMap::from_file(serde_json::from_str(text)?)
}

impl GameMap {
    pub fn from_file(f: MapFile) -> Result<GameMap, MapError> {
        if f.format != MAP_FORMAT {
            return Err(MapError::at("format", format!("expected `{MAP_FORMAT}`, found `{}`", f.format)));
        }
        let rows = f.grid.len();
        let cols = f.grid.first().map_or(0, |r| r.chars().count());
        if rows == 0 || cols == 0 {
            return Err(MapError::at("grid", "empty grid"));
        }
        let mut walkable = vec![false; rows * cols];
        let mut start = None;
        for (r, line) in f.grid.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(MapError::at(format!("grid[{r}]"), format!("expected {cols} columns")));
            }
            for (c, ch) in line.chars().enumerate() {
                let cell = f.legend.get(&ch).ok_or_else(|| MapError::at(format!("grid[{r}]"), format!("character `{ch}` missing from the legend")))?;
                walkable[r * cols + c] = *cell != Cell::Wall;
                if *cell == Cell::Start {
                    if start.is_some() {
                        return Err(MapError::at(format!("grid[{r}]"), "more than one start tile"));
                    }
                    start = Some((r, c));
                }
            }
        }
        let start = start.ok_or_else(|| MapError::at("grid", "no start tile"))?;

        let mut map = GameMap {
            name: f.name.clone(),
            rows,
            cols,
            walkable,
            adjacency: BTreeSet::new(),
            start,
            npcs: BTreeMap::new(),
            quests: BTreeMap::new(),
            items: BTreeMap::new(),
            source: f.clone(),
        };
        if !valid_name(&f.name) {
            return Err(MapError::at("name", "names must be lowercase identifiers"));
        }
        for r in 0..rows {
            for c in 0..cols {
                for d in Direction::ALL {
                    if let Some(to) = d.apply((r, c)) {
                        if map.is_walkable((r, c)) && map.is_walkable(to) {
                            map.adjacency.insert(((r, c), to));
                        }
                    }
                }
            }
        }

        let mut names: BTreeSet<String> = ["hero".to_string()].into();
        let mut claim = |path: String, id: &str| -> Result<(), MapError> {
            if !valid_name(id) {
                return Err(MapError::at(path, format!("`{id}` is not a lowercase identifier")));
            }
            if id.starts_with("t-") || (id.starts_with('n') && id[1..].chars().all(|c| c.is_ascii_digit())) || !names.insert(id.to_string()) {
                return Err(MapError::at(path, format!("name `{id}` is reserved or already used")));
            }
            Ok(())
        };
        for (i, n) in f.npcs.iter().enumerate() {
            claim(format!("npcs[{i}].id"), &n.id)?;
            if !map.is_walkable(n.tile) {
                return Err(MapError::at(format!("npcs[{i}].tile"), "NPC must stand on a walkable tile"));
            }
            map.npcs.insert(n.id.clone(), n.tile);
        }
        let mut item_types = BTreeSet::new();
        for (i, q) in f.quests.iter().enumerate() {
            claim(format!("quests[{i}].id"), &q.id)?;
            if !map.npcs.contains_key(&q.giver) {
                return Err(MapError::at(format!("quests[{i}].giver"), format!("unknown NPC `{}`", q.giver)));
            }
            if q.count == 0 {
                return Err(MapError::at(format!("quests[{i}].count"), "count must be at least 1"));
            }
            if item_types.insert(q.item_type.clone()) {
                claim(format!("quests[{i}].item_type"), &q.item_type)?;
            }
            map.quests.insert(q.id.clone(), q.clone());
        }
        for (i, it) in f.items.iter().enumerate() {
            claim(format!("items[{i}].id"), &it.id)?;
            let Some(q) = map.quests.get(&it.quest) else {
                return Err(MapError::at(format!("items[{i}].quest"), format!("unknown quest `{}`", it.quest)));
            };
            if q.item_type != it.item_type {
                return Err(MapError::at(format!("items[{i}].type"), format!("quest `{}` wants `{}`", q.id, q.item_type)));
            }
            if !map.is_walkable(it.tile) {
                return Err(MapError::at(format!("items[{i}].tile"), "item must spawn on a walkable tile"));
            }
            // A quest started while the hero stands on one of its items
            // would make the item collectable without a move.
            if map.near(q.giver.as_str(), it.tile) {
                return Err(MapError::at(format!("items[{i}].tile"), format!("item spawns next to its quest giver `{}`", q.giver)));
            }
            map.items.insert(it.id.clone(), it.clone());
        }
        for (i, q) in f.quests.iter().enumerate() {
            let spawnable = map.items.values().filter(|it| it.quest == q.id).count();
            if spawnable < q.count {
                return Err(MapError::at(
                    format!("quests[{i}].count"),
                    format!("needs {} `{}` but only {spawnable} spawn for this quest", q.count, q.item_type),
                ));
            }
        }
        if let Some(npc) = map.npcs.keys().find(|n| map.near(n.as_str(), start)) {
            return Err(MapError::at("grid", format!("hero starts next to NPC `{npc}`")));
        }
        for (i, o) in f.overrides.iter().enumerate() {
            if !map.adjacency.contains(&(o.from, o.to)) {
                return Err(MapError::at(format!("overrides[{i}]"), "override must join two 4-adjacent walkable tiles"));
            }
            map.adjacency.remove(&(o.to, o.from));
            if o.kind == OverrideKind::Block {
                map.adjacency.remove(&(o.from, o.to));
            }
        }
        Ok(map)
    }

    pub fn is_walkable(&self, (r, c): Pos) -> bool {
        r < self.rows && c < self.cols && self.walkable[r * self.cols + c]
    }

    pub fn tiles(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| (r, c))).filter(|&p| self.is_walkable(p))
    }

    pub fn connected(&self, from: Pos, to: Pos) -> bool {
        self.adjacency.contains(&(from, to))
    }

    /// Same tile as the NPC or 4-adjacent to it.
    pub fn near(&self, npc: &str, tile: Pos) -> bool {
        self.npcs.get(npc).is_some_and(|&(r, c)| r.abs_diff(tile.0) + c.abs_diff(tile.1) <= 1 && self.is_walkable(tile))
    }

    pub fn item_types(&self) -> BTreeSet<&str> {
        self.items.values().map(|i| i.item_type.as_str()).chain(self.quests.values().map(|q| q.item_type.as_str())).collect()
    }

    /// Largest count any inventory slot can reach.
    pub fn max_count(&self) -> usize {
        self.item_types().into_iter().map(|ty| self.items.values().filter(|i| i.item_type == ty).count()).max().unwrap_or(0)
    }

    pub fn walls(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| (r, c))).filter(|&p| !self.is_walkable(p))
    }

    /// Shortest command sequence from `from` to any tile satisfying `goal`,
    /// taking at least one step. Ties go to the first direction in
    /// [`Direction::ALL`] order.
    pub fn route(&self, from: Pos, goal: impl Fn(Pos) -> bool) -> Option<Vec<Direction>> {
        let mut prev: BTreeMap<Pos, (Pos, Direction)> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            for d in Direction::ALL {
                let Some(n) = d.apply(p) else { continue };
                if !self.connected(p, n) || n == from || prev.contains_key(&n) {
                    continue;
                }
                prev.insert(n, (p, d));
                if goal(n) {
                    let mut path = vec![];
                    let mut cur = n;
                    loop {
                        let (p, d) = prev[&cur];
                        path.push(d);
                        if p == from {
                            break;
                        }
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(n);
            }
        }
        None
    }
}
