mod common;

use std::collections::BTreeSet;

use gtp_core::pddl::{ground, validate_plan};
use gtp_core::planner::{h_add, plan_gbfs, plan_optimal, Limits, Outcome};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn grounding_matches_naive_enumeration(seed in any::<u64>()) {
        let (d, p) = common::random_task(seed);
        let fast = ground(&d, &p);
        let sorted: Vec<_> = fast.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        prop_assert_eq!(&fast, &sorted, "canonical order without duplicates");
        prop_assert_eq!(fast.into_iter().collect::<BTreeSet<_>>(), common::naive_ground(&d, &p));
    }

    #[test]
    fn search_agrees_with_brute_force(seed in any::<u64>()) {
        let (d, p) = common::random_task(seed);
        let Ok(expected) = common::bfs_distance(&d, &p, 100_000) else { return Ok(()) };
        let opt = plan_optimal(&d, &p, None, Limits::unlimited()).unwrap();
        let gbfs = plan_gbfs(&d, &p, Limits::unlimited()).unwrap();
        prop_assert_eq!(opt.cost(), expected);
        prop_assert_eq!(gbfs.cost().is_some(), expected.is_some());
        if let Some(c) = expected {
            prop_assert!(gbfs.cost().unwrap() >= c);
            prop_assert!(validate_plan(&d, &p, gbfs.plan().unwrap()).unwrap().valid);
            prop_assert!(validate_plan(&d, &p, opt.plan().unwrap()).unwrap().valid);
        } else {
            prop_assert_eq!(opt.outcome, Outcome::ProvedNoPlan);
        }
        // The relaxation never loses reachable goals.
        let h = h_add(&p.init, &p.goal, &ground(&d, &p));
        if h.is_none() {
            prop_assert_eq!(expected, None);
        }
        if expected == Some(0) {
            prop_assert_eq!(h, Some(0));
        }
    }

    #[test]
    fn bounded_search_brackets_the_optimum(seed in any::<u64>()) {
        let (d, p) = common::random_task(seed);
        let Ok(Some(c)) = common::bfs_distance(&d, &p, 100_000) else { return Ok(()) };
        prop_assert_eq!(plan_optimal(&d, &p, Some(c), Limits::unlimited()).unwrap().cost(), Some(c));
        if c > 0 {
            let below = plan_optimal(&d, &p, Some(c - 1), Limits::unlimited()).unwrap().outcome;
            let proved = matches!(below, Outcome::ProvedNoPlanWithinBound { .. } | Outcome::ProvedNoPlan);
            prop_assert!(proved, "{:?}", below);
        }
    }
}

#[test]
fn h_add_matches_relaxed_distance_on_a_corridor() {
    // Hero two moves from the goal tile: relaxed distance 2.
    let d = gtp_core::pddl::parse_domain(
        "(define (domain c) (:requirements :strips :typing) (:types tile)
           (:predicates (at ?t - tile) (nb ?a - tile ?b - tile))
           (:action move :parameters (?a - tile ?b - tile)
             :precondition (and (at ?a) (nb ?a ?b)) :effect (and (at ?b) (not (at ?a)))))",
    )
    .unwrap();
    let p = gtp_core::pddl::parse_problem(
        "(define (problem c) (:domain c) (:objects t1 t2 t3 - tile)
           (:init (at t1) (nb t1 t2) (nb t2 t3) (nb t2 t1) (nb t3 t2)) (:goal (at t3)))",
    )
    .unwrap();
    assert_eq!(h_add(&p.init, &p.goal, &ground(&d, &p)), Some(2));
    assert_eq!(common::bfs_distance(&d, &p, 100).unwrap(), Some(2));
}
