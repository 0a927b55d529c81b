//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use gtp_core::pddl::{
    apply, instantiate, ActionSchema, Atom, AtomSet, Domain, GroundAction, GroundAtom, PlanStep, PredicateDecl, Problem, State, Term, TypedParam, OBJECT_TYPE,
};
use gtp_core::sim::reference_domain;
use gtp_core::trace::{Delta, Trace, TraceHeader, TraceStep};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small random typed STRIPS domain with a matching problem.
pub fn random_task(seed: u64) -> (Domain, Problem) {
    let mut r = rng(seed);
    let types: Vec<String> = (0..r.random_range(0..=2)).map(|i| format!("ty{i}")).collect();
    let mut all_types = types.clone();
    all_types.push(OBJECT_TYPE.to_string());
    let pick_type = |r: &mut ChaCha8Rng| all_types.choose(r).unwrap().clone();

    let mut d = Domain { name: format!("rand-{}", seed % 1000), types: types.iter().cloned().collect(), ..Domain::default() };
    for i in 0..r.random_range(1..=4) {
        let name = format!("p{i}");
        let params = (0..r.random_range(0..=2)).map(|j| TypedParam::new(format!("x{j}"), pick_type(&mut r))).collect();
        d.predicates.insert(name.clone(), PredicateDecl { name, params });
    }
    let preds: Vec<PredicateDecl> = d.predicates.values().cloned().collect();
    let objects: Vec<(String, String)> = (0..r.random_range(1..=4))
        .map(|i| {
            let ty = if types.is_empty() { OBJECT_TYPE.to_string() } else { types.choose(&mut r).unwrap().clone() };
            (format!("o{i}"), ty)
        })
        .collect();

    for i in 0..r.random_range(1..=4) {
        let params: Vec<TypedParam> = (0..r.random_range(0..=3)).map(|j| TypedParam::new(format!("v{j}"), pick_type(&mut r))).collect();
        let atom = |r: &mut ChaCha8Rng| {
            let p = preds.choose(r).unwrap();
            let args = (0..p.arity())
                .map(|_| {
                    if !params.is_empty() && r.random_bool(0.85) {
                        Term::var(params.choose(r).unwrap().name.clone())
                    } else {
                        Term::Obj(objects.choose(r).unwrap().0.clone())
                    }
                })
                .collect();
            Atom::new(p.name.clone(), args)
        };
        let pre: BTreeSet<Atom> = (0..r.random_range(0..=3)).map(|_| atom(&mut r)).collect();
        let add: BTreeSet<Atom> = (0..r.random_range(0..=2)).map(|_| atom(&mut r)).collect();
        let del: BTreeSet<Atom> = (0..r.random_range(0..=2)).map(|_| atom(&mut r)).filter(|a| !add.contains(a)).collect();
        let name = format!("a{i}");
        d.actions.insert(name.clone(), ActionSchema { name, params, pre, add, del });
    }
    d.check().expect("generator builds valid domains");

    let ground_atom = |r: &mut ChaCha8Rng| {
        let p = preds.choose(r).unwrap();
        GroundAtom::new(p.name.clone(), (0..p.arity()).map(|_| objects.choose(r).unwrap().0.clone()).collect::<Vec<_>>())
    };
    let init: State = (0..r.random_range(0..=5)).map(|_| ground_atom(&mut r)).collect();
    let mut goal: AtomSet = (0..r.random_range(0..=2)).map(|_| ground_atom(&mut r)).collect();
    let mut p = Problem { name: format!("prob-{}", seed % 1000), domain: d.name.clone(), objects: objects.into_iter().collect(), init, goal: AtomSet::new() };
    if r.random_bool(0.7) {
        // Mostly reachable goals: atoms of a random walk's end state.
        let actions = all_instantiations(&d, &p);
        let mut s = p.init.clone();
        for _ in 0..r.random_range(1..=8) {
            let applicable: Vec<&GroundAction> = actions.iter().filter(|a| a.pre.is_subset(s.atoms())).collect();
            let Some(a) = applicable.choose(&mut r) else { break };
            s = apply(&s, a).unwrap();
        }
        let fresh: Vec<&GroundAtom> = s.atoms().difference(p.init.atoms()).collect();
        goal = fresh.choose_multiple(&mut r, 2).map(|a| (*a).clone()).collect();
        let all: Vec<&GroundAtom> = s.atoms().iter().collect();
        if let Some(kept) = all.choose(&mut r).filter(|_| r.random_bool(0.3)) {
            goal.insert((*kept).clone());
        }
    }
    p.goal = goal;
    (d, p)
}

fn type_ok(p: &Problem, ty: &str, obj: &str) -> bool {
    ty == OBJECT_TYPE || p.objects[obj] == ty
}

/// Every type-correct instantiation of every schema, without any pruning.
pub fn all_instantiations(d: &Domain, p: &Problem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in d.actions.values() {
        let mut tuples: Vec<Vec<String>> = vec![vec![]];
        for param in &schema.params {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    p.objects.keys().filter(|o| type_ok(p, &param.ty, o)).map(move |o| {
                        let mut t = t.clone();
                        t.push(o.clone());
                        t
                    })
                })
                .collect();
        }
        out.extend(tuples.iter().map(|t| instantiate(schema, t)));
    }
    out
}

/// Ground actions reachable under the delete relaxation, by naive rounds.
pub fn naive_ground(d: &Domain, p: &Problem) -> BTreeSet<GroundAction> {
    let all = all_instantiations(d, p);
    let mut reach: AtomSet = p.init.atoms().clone();
    let mut kept = BTreeSet::new();
    loop {
        let before = (reach.len(), kept.len());
        for ga in &all {
            if ga.pre.is_subset(&reach) {
                reach.extend(ga.add.iter().cloned());
                kept.insert(ga.clone());
            }
        }
        if (reach.len(), kept.len()) == before {
            return kept;
        }
    }
}

/// Length of a shortest plan by plain breadth-first search over explicit
/// states; `Err(())` if the reachable space exceeds `cap` states.
pub fn bfs_distance(d: &Domain, p: &Problem, cap: usize) -> Result<Option<usize>, ()> {
    bfs_distance_from(&static_pruned(d, p), &p.init, &p.goal, cap)
}

/// All instantiations minus those needing a false atom of a predicate that
/// no action changes.
pub fn static_pruned(d: &Domain, p: &Problem) -> Vec<GroundAction> {
    let changing: BTreeSet<&str> = d.actions.values().flat_map(|a| a.add.iter().chain(&a.del)).map(|a| a.predicate.as_str()).collect();
    all_instantiations(d, p).into_iter().filter(|ga| ga.pre.iter().all(|a| changing.contains(a.predicate.as_str()) || p.init.contains(a))).collect()
}

/// Whether every quest has exactly as many items as it asks for.
pub fn no_surplus_items(map: &gtp_core::sim::GameMap) -> bool {
    map.quests.values().all(|q| map.items.values().filter(|i| i.quest == q.id).count() == q.count)
}

pub fn bfs_distance_from(actions: &[GroundAction], init: &State, goal: &AtomSet, cap: usize) -> Result<Option<usize>, ()> {
    let mut seen: BTreeMap<State, usize> = BTreeMap::new();
    seen.insert(init.clone(), 0);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(s) = queue.pop_front() {
        let depth = seen[&s];
        if goal.is_subset(s.atoms()) {
            return Ok(Some(depth));
        }
        for ga in actions {
            if let Ok(next) = apply(&s, ga) {
                if !seen.contains_key(&next) {
                    if seen.len() >= cap {
                        return Err(());
                    }
                    seen.insert(next.clone(), depth + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(None)
}

/// A random small map with one or two quests; may contain one-way edges
/// and unreachable regions.
pub fn random_map(seed: u64) -> gtp_core::sim::GameMap {
    use gtp_core::sim::{Cell, GameMap, ItemSpec, MapFile, NpcSpec, Override, OverrideKind, QuestSpec};
    let mut r = rng(seed);
    loop {
        let (rows, cols) = (r.random_range(3..=6), r.random_range(3..=6));
        let mut grid: Vec<Vec<char>> = (0..rows).map(|_| (0..cols).map(|_| if r.random_bool(0.2) { '#' } else { '.' }).collect()).collect();
        let floor: Vec<(usize, usize)> = (0..rows).flat_map(|a| (0..cols).map(move |b| (a, b))).filter(|&(a, b)| grid[a][b] == '.').collect();
        if floor.len() < 4 {
            continue;
        }
        let start = *floor.choose(&mut r).unwrap();
        grid[start.0][start.1] = '@';
        let quests = r.random_range(1..=2);
        let npcs: Vec<NpcSpec> = (0..quests).map(|i| NpcSpec { id: format!("npc-{i}"), tile: *floor.choose(&mut r).unwrap() }).collect();
        let mut items = Vec::new();
        let mut qs = Vec::new();
        for i in 0..quests {
            let count = r.random_range(1..=2);
            let ty = format!("thing-{i}");
            for j in 0..r.random_range(count..=count + 1) {
                items.push(ItemSpec { id: format!("item-{i}-{j}"), item_type: ty.clone(), tile: *floor.choose(&mut r).unwrap(), quest: format!("q-{i}") });
            }
            qs.push(QuestSpec { id: format!("q-{i}"), giver: format!("npc-{i}"), item_type: ty, count });
        }
        let mut overrides = Vec::new();
        if r.random_bool(0.5) {
            let from = *floor.choose(&mut r).unwrap();
            let d = *gtp_core::sim::Direction::ALL.choose(&mut r).unwrap();
            if let Some(to) = d.apply(from).filter(|t| floor.contains(t)) {
                overrides.push(Override { from, to, kind: if r.random_bool(0.8) { OverrideKind::OneWay } else { OverrideKind::Block } });
            }
        }
        let f = MapFile {
            format: "gmap-1".into(),
            name: format!("rand-{seed}"),
            legend: [('#', Cell::Wall), ('.', Cell::Floor), ('@', Cell::Start)].into_iter().collect(),
            grid: grid.into_iter().map(|row| row.into_iter().collect()).collect(),
            npcs,
            quests: qs,
            items,
            overrides,
        };
        if let Ok(m) = GameMap::from_file(f) {
            return m;
        }
    }
}

/// Breadth-first search over interned atom ids, for state spaces too large
/// for [`bfs_distance`]. Returns the goal distance, or `Err(())` past `cap`
/// states.
pub fn compact_bfs(actions: &[GroundAction], init: &State, goal: &AtomSet, cap: usize) -> Result<Option<usize>, ()> {
    use std::collections::HashMap;
    let mut ids: HashMap<&GroundAtom, u32> = HashMap::new();
    for a in actions.iter().flat_map(|a| a.pre.iter().chain(&a.add).chain(&a.del)).chain(init.atoms()) {
        let n = ids.len() as u32;
        ids.entry(a).or_insert(n);
    }
    let Some(goal): Option<Vec<u32>> = goal.iter().map(|g| ids.get(g).copied()).collect() else {
        return Ok(None);
    };
    let enc = |set: &AtomSet| -> Vec<u32> {
        let mut v: Vec<u32> = set.iter().map(|a| ids[a]).collect();
        v.sort_unstable();
        v
    };
    struct Op {
        pre: Vec<u32>,
        add: Vec<u32>,
        del: Vec<u32>,
    }
    let ops: Vec<Op> = actions.iter().map(|a| Op { pre: enc(&a.pre), add: enc(&a.add), del: enc(&a.del) }).collect();
    let mut by_first: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut free = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match op.pre.first() {
            Some(&f) => by_first.entry(f).or_default().push(i),
            None => free.push(i),
        }
    }
    let start = enc(init.atoms());
    let holds = |s: &[u32], atoms: &[u32]| atoms.iter().all(|a| s.binary_search(a).is_ok());
    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let depth = seen[&s];
        if holds(&s, &goal) {
            return Ok(Some(depth));
        }
        let candidates = free.iter().chain(s.iter().flat_map(|a| by_first.get(a).into_iter().flatten()));
        for &i in candidates {
            let op = &ops[i];
            if !holds(&s, &op.pre) {
                continue;
            }
            let mut next: Vec<u32> = s.iter().copied().filter(|a| op.add.contains(a) || !op.del.contains(a)).collect();
            next.extend(op.add.iter().copied());
            next.sort_unstable();
            next.dedup();
            if !seen.contains_key(&next) {
                if seen.len() >= cap {
                    return Err(());
                }
                seen.insert(next.clone(), depth + 1);
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// Tiles reachable from `from` along the map's directed adjacency.
pub fn reachable_tiles(map: &gtp_core::sim::GameMap, from: gtp_core::sim::Pos) -> BTreeSet<gtp_core::sim::Pos> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(p) = stack.pop() {
        for &(a, b) in &map.adjacency {
            if a == p && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen
}

/// One to three random play sessions on a shared map, each 0..=150
/// commands long.
pub fn corpus(seed: u64) -> (gtp_core::sim::GameMap, Vec<gtp_core::trace::NamedTrace>) {
    let mut r = rng(seed);
    let map = match r.random_range(0..4) {
        0 => gtp_core::sim::maps::demo(),
        1 => gtp_core::sim::maps::trap(),
        2 => gtp_core::sim::maps::small(),
        _ => random_map(seed),
    };
    let traces = (0..r.random_range(1..=3))
        .map(|i| {
            let policy = if r.random_bool(0.15) {
                gtp_core::sim::Policy::Coverage
            } else {
                gtp_core::sim::Policy::Random { seed: r.random(), steps: r.random_range(0..=150) }
            };
            gtp_core::trace::NamedTrace::new(
                format!("t{i}.jsonl"),
                gtp_core::sim::scripted_playthrough(&map, policy)
                    .unwrap_or_else(|_| gtp_core::sim::scripted_playthrough(&map, gtp_core::sim::Policy::Random { seed, steps: 150 }).unwrap()),
            )
        })
        .collect();
    (map, traces)
}

/// A random well-formed trace over made-up predicates, mixing delta and
/// full-state steps.
pub fn random_trace(seed: u64) -> Trace {
    let mut r = rng(seed);
    let objects: BTreeMap<String, String> = (0..r.random_range(0..6)).map(|i| (format!("o{i}"), format!("k{}", i % 3))).collect();
    let names: Vec<String> = objects.keys().cloned().collect();
    let atom = |r: &mut rand_chacha::ChaCha8Rng, pred: &str| {
        let arity = if names.is_empty() { 0 } else { r.random_range(0..=2) };
        GroundAtom::new(pred, (0..arity).map(|_| names.choose(r).unwrap().clone()).collect::<Vec<_>>())
    };
    let statics = (0..r.random_range(0..5)).map(|_| atom(&mut r, "fixed")).collect();
    let pool: Vec<GroundAtom> = (0..r.random_range(1..8)).map(|i| atom(&mut r, &format!("dyn-{}", i % 3))).collect();
    let subset = |r: &mut rand_chacha::ChaCha8Rng| -> State { pool.iter().filter(|_| r.random_bool(0.5)).cloned().collect() };
    let init = subset(&mut r);
    let mut t = Trace::new(TraceHeader::new(objects, statics, init.clone()));
    let mut prev = init;
    for index in 0..r.random_range(0..12) {
        let next = subset(&mut r);
        let args: Vec<String> = (0..r.random_range(0..3)).filter_map(|_| names.choose(&mut r).cloned()).collect();
        let (delta, state) = match r.random_range(0..3) {
            0 => (Some(Delta::between(&prev, &next)), None),
            1 => (None, Some(next.clone())),
            _ => (Some(Delta::between(&prev, &next)), Some(next.clone())),
        };
        t.steps.push(TraceStep { index, action: PlanStep::new(format!("act-{}", r.random_range(0..3)), args), delta, state });
        prev = next;
    }
    t
}

/// Replays every step under the reference domain; returns the first
/// divergent step.
pub fn replay(t: &Trace) -> Result<(), String> {
    let d = reference_domain();
    let states = t.reconstruct_states().map_err(|e| e.to_string())?;
    let full = |s: &State| {
        let mut f = s.clone();
        f.extend(t.header.static_facts.iter().cloned());
        f
    };
    for (i, step) in t.steps.iter().enumerate() {
        let schema = d.action(&step.action.name).ok_or(format!("step {i}: unknown action"))?;
        let next = apply(&full(&states[i]), &instantiate(schema, &step.action.args)).map_err(|e| format!("step {i}: {e}"))?;
        if next != full(&states[i + 1]) {
            return Err(format!("step {i}: successor differs"));
        }
    }
    Ok(())
}
