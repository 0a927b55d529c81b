//! STRIPS subset of PDDL (`:strips` + `:typing`, flat types).
//!
//! Lifted schemas are written over [`Atom`]s whose arguments are [`Term`]s;
//! states, goals and ground actions use [`GroundAtom`]s. Every container is
//! ordered so that printing, hashing and equality are canonical.

mod ground;
mod parser;
mod planfile;
mod printer;
mod semantics;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use ground::{ground, relaxed_reachable};
pub use parser::{parse_domain, parse_problem, ParseError};
pub use planfile::{parse_plan, print_plan, PlanParseError};
pub use printer::{print_domain, print_problem};
pub use semantics::{applicable, apply, instantiate, missing_preconditions, NotApplicable};
pub use validate::{validate_plan, FailureKind, PlanError, ValidationFailure, ValidationReport};

/// Root type that every object is compatible with.
pub const OBJECT_TYPE: &str = "object";

/// A schema argument: either a parameter (`?x`) or an object constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Obj(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        let name = name.into();
        Term::Var(name.trim_start_matches('?').to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Obj(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Obj(o) => f.write_str(o),
        }
    }
}

/// A possibly lifted atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Obj(_)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A ground atom. Ordering is by predicate name, then arguments
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom { predicate: predicate.into(), args: args.into_iter().map(Into::into).collect() }
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.args.iter().map(String::as_str)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

// Atoms travel as `["pred", "arg1", ...]` in every JSON artifact.
impl Serialize for GroundAtom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.args.len() + 1))?;
        seq.serialize_element(&self.predicate)?;
        for a in &self.args {
            seq.serialize_element(a)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for GroundAtom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut parts: Vec<String> = Vec::deserialize(d)?;
        if parts.is_empty() {
            return Err(serde::de::Error::custom("atom array must start with a predicate name"));
        }
        let predicate = parts.remove(0);
        Ok(GroundAtom { predicate, args: parts })
    }
}

pub type AtomSet = BTreeSet<GroundAtom>;

/// Closed-world state: a ground atom is true iff it is a member.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub AtomSet);

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn satisfies(&self, goal: &AtomSet) -> bool {
        goal.is_subset(&self.0)
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        State(iter.into_iter().collect())
    }
}

impl Extend<GroundAtom> for State {
    fn extend<I: IntoIterator<Item = GroundAtom>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl IntoIterator for State {
    type Item = GroundAtom;
    type IntoIter = std::collections::btree_set::IntoIter<GroundAtom>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a State {
    type Item = &'a GroundAtom;
    type IntoIter = std::collections::btree_set::Iter<'a, GroundAtom>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// `(name, type)` pair in a parameter list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

impl TypedParam {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedParam { name: name.into().trim_start_matches('?').to_string(), ty: ty.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedParam>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub pre: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == var)
    }

    /// Atoms deleted without being required first. Legal STRIPS, but
    /// usually a modelling slip.
    pub fn unguarded_deletes(&self) -> impl Iterator<Item = &Atom> {
        self.del.iter().filter(|a| !self.pre.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Domain {
    pub name: String,
    pub types: BTreeSet<String>,
    pub predicates: BTreeMap<String, PredicateDecl>,
    pub actions: BTreeMap<String, ActionSchema>,
}

impl Domain {
    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.get(name)
    }

    /// Checks the structural invariants that the parser also enforces.
    pub fn check(&self) -> Result<(), DomainError> {
        for (name, decl) in &self.predicates {
            let mut seen = BTreeSet::new();
            for p in &decl.params {
                if !seen.insert(&p.name) {
                    return Err(DomainError::DuplicateParameter { item: name.clone(), param: p.name.clone() });
                }
                self.check_type(&p.ty)?;
            }
        }
        for (name, schema) in &self.actions {
            let mut seen = BTreeSet::new();
            for p in &schema.params {
                if !seen.insert(p.name.as_str()) {
                    return Err(DomainError::DuplicateParameter { item: name.clone(), param: p.name.clone() });
                }
                self.check_type(&p.ty)?;
            }
            for atom in schema.pre.iter().chain(&schema.add).chain(&schema.del) {
                let decl = self
                    .predicates
                    .get(&atom.predicate)
                    .ok_or_else(|| DomainError::UndeclaredPredicate { action: name.clone(), predicate: atom.predicate.clone() })?;
                if decl.arity() != atom.args.len() {
                    return Err(DomainError::ArityMismatch {
                        action: name.clone(),
                        predicate: atom.predicate.clone(),
                        expected: decl.arity(),
                        found: atom.args.len(),
                    });
                }
                for v in atom.vars() {
                    if !seen.contains(v) {
                        return Err(DomainError::UnboundVariable { action: name.clone(), var: v.to_string() });
                    }
                }
            }
            if let Some(a) = schema.add.intersection(&schema.del).next() {
                return Err(DomainError::AddDeleteOverlap { action: name.clone(), atom: a.to_string() });
            }
        }
        Ok(())
    }

    fn check_type(&self, ty: &str) -> Result<(), DomainError> {
        if ty == OBJECT_TYPE || self.types.contains(ty) {
            Ok(())
        } else {
            Err(DomainError::UnknownType(ty.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("action `{action}` uses undeclared predicate `{predicate}`")]
    UndeclaredPredicate { action: String, predicate: String },
    #[error("action `{action}`: `{predicate}` takes {expected} arguments, found {found}")]
    ArityMismatch { action: String, predicate: String, expected: usize, found: usize },
    #[error("action `{action}` uses unbound variable ?{var}")]
    UnboundVariable { action: String, var: String },
    #[error("`{item}` declares parameter ?{param} twice")]
    DuplicateParameter { item: String, param: String },
    #[error("action `{action}` both adds and deletes {atom}")]
    AddDeleteOverlap { action: String, atom: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: BTreeMap<String, String>,
    pub init: State,
    pub goal: AtomSet,
}

impl Problem {
    pub fn objects_of_type<'a>(&'a self, ty: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.objects.iter().filter(move |(_, t)| ty == OBJECT_TYPE || t.as_str() == ty).map(|(o, _)| o.as_str())
    }

    /// Every object mentioned by `init` and `goal` must be declared.
    pub fn check(&self) -> Result<(), ProblemError> {
        for atom in self.init.iter().chain(&self.goal) {
            for o in atom.objects() {
                if !self.objects.contains_key(o) {
                    return Err(ProblemError::UndeclaredObject { object: o.to_string(), atom: atom.to_string() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("object `{object}` in {atom} is not declared")]
    UndeclaredObject { object: String, atom: String },
}

/// A fully instantiated action with its ground precondition and effects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub pre: AtomSet,
    pub add: AtomSet,
    pub del: AtomSet,
}

impl GroundAction {
    pub fn step(&self) -> PlanStep {
        PlanStep { name: self.name.clone(), args: self.args.clone() }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Reference to a ground action by name and arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub name: String,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new<S: Into<String>>(name: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        PlanStep { name: name.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan(pub Vec<PlanStep>);

impl Plan {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.0
    }
}

impl FromIterator<PlanStep> for Plan {
    fn from_iter<I: IntoIterator<Item = PlanStep>>(iter: I) -> Self {
        Plan(iter.into_iter().collect())
    }
}

/// Shorthand for building ground atoms in code and tests:
/// `fact!("at", "hero", "t1")`.
#[macro_export]
macro_rules! fact {
    ($pred:expr $(, $arg:expr)* $(,)?) => {{
        let args: Vec<String> = vec![$($arg.to_string()),*];
        $crate::pddl::GroundAtom::new($pred, args)
    }};
}
