mod common;

use gtp_core::fact;
use gtp_core::planner::{plan_optimal, Limits};
use gtp_core::scenario::{dead_end_scan, shortcut_check, DeadEndVerdict, ShortcutVerdict};
use gtp_core::sim::{export_problem, maps, reference_domain};

#[test]
fn demo_map_is_strongly_connected() {
    let m = maps::demo();
    let tiles: std::collections::BTreeSet<_> = m.tiles().collect();
    for t in &tiles {
        assert_eq!(&common::reachable_tiles(&m, *t), &tiles, "from {t:?}");
    }
}

#[test]
fn trap_pit_is_detected_and_every_dead_end_is_real() {
    let m = maps::trap();
    let d = reference_domain();
    let p = export_problem(&m, None);
    let report = dead_end_scan(&d, &p, &p.goal, 20, 30, 7, Limits::default()).unwrap();
    assert!(report.dead_ends >= 1, "{} dead-ends", report.dead_ends);
    assert_eq!(report.unknown, 0);
    let actions = common::static_pruned(&d, &p);
    for r in report.results.iter().filter(|r| r.verdict == DeadEndVerdict::DeadEnd) {
        let state = r.state.as_ref().unwrap();
        assert_eq!(common::compact_bfs(&actions, state, &p.goal, 2_000_000), Ok(None), "sample {}", r.sample);
    }
    // Reproducible from (seed, n, k).
    let again = dead_end_scan(&d, &p, &p.goal, 20, 30, 7, Limits::default()).unwrap();
    let key =
        |r: &gtp_core::scenario::DeadEndReport| r.results.iter().map(|s| (s.seed, s.verdict, s.distance, s.walk.clone(), s.state.clone())).collect::<Vec<_>>();
    assert_eq!(key(&report), key(&again));
}

#[test]
fn small_map_optimum_matches_brute_force() {
    let m = maps::small();
    let d = reference_domain();
    let p = export_problem(&m, None);
    let expected = common::bfs_distance(&d, &p, 1_000_000).unwrap();
    assert_eq!(common::compact_bfs(&common::static_pruned(&d, &p), &p.init, &p.goal, 1_000_000).unwrap(), expected);
    assert_eq!(plan_optimal(&d, &p, None, Limits::default()).unwrap().cost(), expected);
}

#[test]
fn apple_quest_shortcut_bounds() {
    let m = maps::demo();
    let d = reference_domain();
    let p = export_problem(&m, Some([fact!("quest-done", "q-apples")].into_iter().collect()));
    let cost = common::compact_bfs(&common::static_pruned(&d, &p), &p.init, &p.goal, 5_000_000).unwrap().unwrap();
    assert_eq!(shortcut_check(&d, &p, cost, Limits::default()).unwrap().verdict, ShortcutVerdict::NoShortcut);
    match shortcut_check(&d, &p, cost + 1, Limits::default()).unwrap().verdict {
        ShortcutVerdict::ShortcutFound { witness, cost: c } => {
            assert_eq!((witness.len(), c), (cost, cost));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unreachable_goal_has_no_shortcut() {
    let m = maps::trap();
    let d = reference_domain();
    // Nothing leads back out of the pit.
    let p = export_problem(&m, Some([fact!("at", "hero", "t-2-1"), fact!("at", "hero", "t-1-1")].into_iter().collect()));
    for bound in [0, 1, 5, 40] {
        assert_eq!(shortcut_check(&d, &p, bound, Limits::default()).unwrap().verdict, ShortcutVerdict::NoShortcut);
    }
}
