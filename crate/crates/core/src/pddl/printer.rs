use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Atom, Domain, GroundAtom, Problem, TypedParam, OBJECT_TYPE};

fn typed_params(params: &[TypedParam]) -> String {
    params.iter().map(|p| format!("?{} - {}", p.name, p.ty)).collect::<Vec<_>>().join(" ")
}

fn conjunction<'a, T: std::fmt::Display + 'a>(atoms: impl IntoIterator<Item = &'a T>) -> String {
    let parts: Vec<String> = atoms.into_iter().map(ToString::to_string).collect();
    match parts.len() {
        0 => "()".to_string(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

pub fn print_domain(d: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    out.push_str("  (:requirements :strips :typing)\n");
    if !d.types.is_empty() {
        let types: Vec<&str> = d.types.iter().map(String::as_str).collect();
        let _ = writeln!(out, "  (:types {})", types.join(" "));
    }
    if !d.predicates.is_empty() {
        out.push_str("  (:predicates\n");
        for decl in d.predicates.values() {
            if decl.params.is_empty() {
                let _ = writeln!(out, "    ({})", decl.name);
            } else {
                let _ = writeln!(out, "    ({} {})", decl.name, typed_params(&decl.params));
            }
        }
        out.push_str("  )\n");
    }
    for a in d.actions.values() {
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", typed_params(&a.params));
        let _ = writeln!(out, "    :precondition {}", conjunction::<Atom>(&a.pre));
        let effects: Vec<String> = a.add.iter().map(ToString::to_string).chain(a.del.iter().map(|x| format!("(not {x})"))).collect();
        if effects.is_empty() {
            out.push_str("    :effect ())\n");
        } else {
            let _ = writeln!(out, "    :effect (and {}))", effects.join(" "));
        }
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (o, t) in &p.objects {
        by_type.entry(t.as_str()).or_default().push(o);
    }
    out.push_str("  (:objects\n");
    for (t, objs) in by_type {
        if t == OBJECT_TYPE {
            let _ = writeln!(out, "    {}", objs.join(" "));
        } else {
            let _ = writeln!(out, "    {} - {}", objs.join(" "), t);
        }
    }
    out.push_str("  )\n  (:init\n");
    for a in p.init.iter() {
        let _ = writeln!(out, "    {a}");
    }
    out.push_str("  )\n");
    let _ = writeln!(out, "  (:goal {})", conjunction::<GroundAtom>(&p.goal));
    out.push_str(")\n");
    out
}
