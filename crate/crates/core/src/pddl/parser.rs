use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ActionSchema, Atom, Domain, GroundAtom, PredicateDecl, Problem, Term, TypedParam, OBJECT_TYPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("{pos}: unsupported feature {feature}")]
    UnsupportedFeature { pos: Pos, feature: String },
    #[error("{pos}: {message}")]
    Invalid { pos: Pos, message: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnsupportedFeature { pos, .. } | ParseError::Invalid { pos, .. } => *pos,
        }
    }

    fn expected(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> Self {
        ParseError::Syntax { pos, expected: expected.into(), found: found.into() }
    }

    fn invalid(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Invalid { pos, message: message.into() }
    }

    fn unsupported(pos: Pos, feature: impl Into<String>) -> Self {
        ParseError::UnsupportedFeature { pos, feature: feature.into() }
    }
}

#[derive(Debug, Clone)]
enum Sexp {
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn describe(&self) -> String {
        match self {
            Sexp::Sym(s, _) => format!("`{s}`"),
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Sym(head, _)) => format!("list `({head} ...)`"),
                _ => "list".to_string(),
            },
        }
    }

    fn sym(&self, what: &str) -> Result<&str, ParseError> {
        match self {
            Sexp::Sym(s, _) => Ok(s),
            other => Err(ParseError::expected(other.pos(), what, other.describe())),
        }
    }

    fn list(&self, what: &str) -> Result<&[Sexp], ParseError> {
        match self {
            Sexp::List(items, _) => Ok(items),
            other => Err(ParseError::expected(other.pos(), what, other.describe())),
        }
    }
}

fn tokenize_and_read(text: &str) -> Result<Sexp, ParseError> {
    let lowered = text.to_lowercase();
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut result: Option<Sexp> = None;
    let mut chars = lowered.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let mut symbol = String::new();
    let mut symbol_pos = Pos::default();

    fn flush(symbol: &mut String, pos: Pos, stack: &mut [(Vec<Sexp>, Pos)], result: &mut Option<Sexp>) -> Result<(), ParseError> {
        if symbol.is_empty() {
            return Ok(());
        }
        let sym = Sexp::Sym(std::mem::take(symbol), pos);
        match stack.last_mut() {
            Some((items, _)) => items.push(sym),
            None if result.is_none() => return Err(ParseError::expected(pos, "`(`", sym.describe())),
            None => return Err(ParseError::expected(pos, "end of input", sym.describe())),
        }
        Ok(())
    }

    while let Some(c) = chars.next() {
        let here = Pos { line, col };
        match c {
            '(' => {
                flush(&mut symbol, symbol_pos, &mut stack, &mut result)?;
                if result.is_some() && stack.is_empty() {
                    return Err(ParseError::expected(here, "end of input", "`(`"));
                }
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut symbol, symbol_pos, &mut stack, &mut result)?;
                let (items, open) = stack.pop().ok_or_else(|| ParseError::expected(here, "`(` or end of input", "`)`"))?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            ';' => {
                flush(&mut symbol, symbol_pos, &mut stack, &mut result)?;
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
                col += 1;
                continue;
            }
            c if c.is_whitespace() => flush(&mut symbol, symbol_pos, &mut stack, &mut result)?,
            c => {
                if symbol.is_empty() {
                    symbol_pos = here;
                }
                symbol.push(c);
            }
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    let end = Pos { line, col };
    flush(&mut symbol, symbol_pos, &mut stack, &mut result)?;
    if let Some((_, open)) = stack.last() {
        return Err(ParseError::expected(end, format!("`)` closing the list opened at {open}"), "end of input"));
    }
    result.ok_or_else(|| ParseError::expected(end, "`(define ...)`", "end of input"))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn identifier<'a>(sexp: &'a Sexp, what: &str) -> Result<&'a str, ParseError> {
    let s = sexp.sym(what)?;
    if is_identifier(s) {
        Ok(s)
    } else {
        Err(ParseError::expected(sexp.pos(), what, format!("`{s}`")))
    }
}

fn variable(sexp: &Sexp) -> Result<String, ParseError> {
    let s = sexp.sym("variable `?name`")?;
    match s.strip_prefix('?') {
        Some(v) if is_identifier(v) => Ok(v.to_string()),
        _ => Err(ParseError::expected(sexp.pos(), "variable `?name`", format!("`{s}`"))),
    }
}

/// Splits `(define (KIND name) sections...)` into its name and sections.
fn define<'a>(root: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp]), ParseError> {
    let items = root.list("`(define ...)`")?;
    match items.first() {
        Some(Sexp::Sym(s, _)) if s == "define" => {}
        Some(other) => return Err(ParseError::expected(other.pos(), "`define`", other.describe())),
        None => return Err(ParseError::expected(root.pos(), "`define`", "empty list")),
    }
    let header = items.get(1).ok_or_else(|| ParseError::expected(root.pos(), format!("`({kind} NAME)`"), "end of list"))?;
    let hdr = header.list(&format!("`({kind} NAME)`"))?;
    match hdr {
        [Sexp::Sym(k, _), name] if k == kind => Ok((identifier(name, &format!("{kind} name"))?.to_string(), &items[2..])),
        _ => Err(ParseError::expected(header.pos(), format!("`({kind} NAME)`"), header.describe())),
    }
}

fn section_keyword(section: &Sexp) -> Result<(&str, &[Sexp]), ParseError> {
    let items = section.list("a `(:section ...)` list")?;
    let head = items.first().ok_or_else(|| ParseError::expected(section.pos(), "section keyword", "empty list"))?;
    let kw = head.sym("section keyword")?;
    if !kw.starts_with(':') {
        return Err(ParseError::expected(head.pos(), "section keyword starting with `:`", format!("`{kw}`")));
    }
    Ok((kw, &items[1..]))
}

fn requirements(items: &[Sexp]) -> Result<(), ParseError> {
    for item in items {
        let flag = item.sym("requirement flag")?;
        match flag {
            ":strips" | ":typing" => {}
            other => return Err(ParseError::unsupported(item.pos(), format!("requirement `{other}`"))),
        }
    }
    Ok(())
}

/// Parses `a b - t c - u d`; entries without a type get `object`.
fn typed_list(items: &[Sexp], vars: bool) -> Result<Vec<(String, String, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if matches!(item, Sexp::Sym(s, _) if s == "-") {
            let ty_sexp = items.get(i + 1).ok_or_else(|| ParseError::expected(item.pos(), "type name after `-`", "end of list"))?;
            if let Sexp::List(l, _) = ty_sexp {
                if matches!(l.first(), Some(Sexp::Sym(s, _)) if s == "either") {
                    return Err(ParseError::unsupported(ty_sexp.pos(), "`either` types"));
                }
            }
            let ty = identifier(ty_sexp, "type name")?;
            if pending.is_empty() {
                return Err(ParseError::expected(item.pos(), "name before `-`", "`-`"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (n, ty.to_string(), p)));
            i += 2;
            continue;
        }
        let name = if vars { variable(item)? } else { identifier(item, "name")?.to_string() };
        pending.push((name, item.pos()));
        i += 1;
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, OBJECT_TYPE.to_string(), p)));
    Ok(out)
}

fn params(items: &[Sexp], owner: &str, types: &BTreeSet<String>) -> Result<Vec<TypedParam>, ParseError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (name, ty, pos) in typed_list(items, true)? {
        if !seen.insert(name.clone()) {
            return Err(ParseError::invalid(pos, format!("`{owner}` declares ?{name} twice")));
        }
        if ty != OBJECT_TYPE && !types.contains(&ty) {
            return Err(ParseError::invalid(pos, format!("unknown type `{ty}`")));
        }
        out.push(TypedParam { name, ty });
    }
    Ok(out)
}

fn lifted_atom(sexp: &Sexp) -> Result<Atom, ParseError> {
    let items = sexp.list("atom `(predicate args...)`")?;
    let head = items.first().ok_or_else(|| ParseError::expected(sexp.pos(), "predicate name", "empty list"))?;
    let predicate = identifier(head, "predicate name")?.to_string();
    let args = items[1..]
        .iter()
        .map(|a| {
            let s = a.sym("term")?;
            if s.starts_with('?') {
                variable(a).map(Term::Var)
            } else {
                identifier(a, "object name").map(|o| Term::Obj(o.to_string()))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(Atom { predicate, args })
}

fn ground_atom(sexp: &Sexp) -> Result<GroundAtom, ParseError> {
    let items = sexp.list("ground atom `(predicate objects...)`")?;
    let head = items.first().ok_or_else(|| ParseError::expected(sexp.pos(), "predicate name", "empty list"))?;
    let predicate = identifier(head, "predicate name")?.to_string();
    let args = items[1..].iter().map(|a| identifier(a, "object name").map(str::to_string)).collect::<Result<_, _>>()?;
    Ok(GroundAtom { predicate, args })
}

fn head_of(sexp: &Sexp) -> Option<&str> {
    match sexp {
        Sexp::List(items, _) => match items.first() {
            Some(Sexp::Sym(s, _)) => Some(s),
            _ => None,
        },
        _ => None,
    }
}

/// Positive conjunction: `()`, a single atom, or `(and ...)`.
fn conjunction<'a>(sexp: &'a Sexp, what: &str) -> Result<Vec<&'a Sexp>, ParseError> {
    let items = sexp.list(what)?;
    match head_of(sexp) {
        None if items.is_empty() => Ok(Vec::new()),
        Some("and") => {
            let mut out = Vec::new();
            for item in &items[1..] {
                out.extend(conjunction(item, what)?);
            }
            Ok(out)
        }
        Some("not") => Err(ParseError::unsupported(sexp.pos(), "negative literals in conditions")),
        Some(c @ ("or" | "imply" | "exists" | "forall" | "when" | "=")) => Err(ParseError::unsupported(sexp.pos(), format!("`{c}`"))),
        _ => Ok(vec![sexp]),
    }
}

fn effect_literals<'a>(sexp: &'a Sexp, out: &mut Vec<(bool, &'a Sexp)>) -> Result<(), ParseError> {
    let items = sexp.list("effect")?;
    match head_of(sexp) {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for item in &items[1..] {
                effect_literals(item, out)?;
            }
            Ok(())
        }
        Some("not") => match &items[1..] {
            [inner] => {
                if matches!(head_of(inner), Some("and" | "not")) {
                    return Err(ParseError::expected(inner.pos(), "atom inside `not`", inner.describe()));
                }
                out.push((false, inner));
                Ok(())
            }
            _ => Err(ParseError::expected(sexp.pos(), "exactly one atom inside `not`", format!("{} items", items.len() - 1))),
        },
        Some(c @ ("when" | "forall" | "increase" | "decrease" | "assign")) => Err(ParseError::unsupported(sexp.pos(), format!("`{c}` effects"))),
        _ => {
            out.push((true, sexp));
            Ok(())
        }
    }
}

fn check_atom(atom: &Atom, pos: Pos, action: &str, predicates: &BTreeMap<String, PredicateDecl>, params: &[TypedParam]) -> Result<(), ParseError> {
    let decl =
        predicates.get(&atom.predicate).ok_or_else(|| ParseError::invalid(pos, format!("action `{action}` uses undeclared predicate `{}`", atom.predicate)))?;
    if decl.arity() != atom.args.len() {
        return Err(ParseError::invalid(pos, format!("predicate `{}` takes {} arguments, found {}", atom.predicate, decl.arity(), atom.args.len())));
    }
    for v in atom.vars() {
        if !params.iter().any(|p| p.name == v) {
            return Err(ParseError::invalid(pos, format!("action `{action}` uses unbound variable ?{v}")));
        }
    }
    Ok(())
}

fn action(items: &[Sexp], pos: Pos, types: &BTreeSet<String>, predicates: &BTreeMap<String, PredicateDecl>) -> Result<ActionSchema, ParseError> {
    let name_sexp = items.first().ok_or_else(|| ParseError::expected(pos, "action name", "end of list"))?;
    let name = identifier(name_sexp, "action name")?.to_string();
    let mut parameters = Vec::new();
    let mut pre = BTreeSet::new();
    let mut add = BTreeSet::new();
    let mut del = BTreeSet::new();
    let mut i = 1;
    while i < items.len() {
        let key = items[i].sym("`:parameters`, `:precondition` or `:effect`")?;
        let value = items.get(i + 1).ok_or_else(|| ParseError::expected(items[i].pos(), format!("value after `{key}`"), "end of list"))?;
        match key {
            ":parameters" => parameters = params(value.list("parameter list")?, &name, types)?,
            ":precondition" => {
                for a in conjunction(value, "precondition")? {
                    let atom = lifted_atom(a)?;
                    check_atom(&atom, a.pos(), &name, predicates, &parameters)?;
                    pre.insert(atom);
                }
            }
            ":effect" => {
                let mut lits = Vec::new();
                effect_literals(value, &mut lits)?;
                for (positive, a) in lits {
                    let atom = lifted_atom(a)?;
                    check_atom(&atom, a.pos(), &name, predicates, &parameters)?;
                    if positive {
                        add.insert(atom);
                    } else {
                        del.insert(atom);
                    }
                }
            }
            other => return Err(ParseError::unsupported(items[i].pos(), format!("action key `{other}`"))),
        }
        i += 2;
    }
    if let Some(a) = add.intersection(&del).next() {
        return Err(ParseError::invalid(pos, format!("action `{name}` both adds and deletes {a}")));
    }
    Ok(ActionSchema { name, params: parameters, pre, add, del })
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let root = tokenize_and_read(text)?;
    let (name, sections) = define(&root, "domain")?;
    let mut domain = Domain { name, ..Domain::default() };
    for section in sections {
        let (kw, body) = section_keyword(section)?;
        match kw {
            ":requirements" => requirements(body)?,
            ":types" => {
                for (ty, parent, pos) in typed_list(body, false)? {
                    if parent != OBJECT_TYPE {
                        return Err(ParseError::unsupported(pos, format!("type hierarchy (`{ty} - {parent}`)")));
                    }
                    if ty != OBJECT_TYPE {
                        domain.types.insert(ty);
                    }
                }
            }
            ":predicates" => {
                for decl in body {
                    let items = decl.list("predicate declaration")?;
                    let head = items.first().ok_or_else(|| ParseError::expected(decl.pos(), "predicate name", "empty list"))?;
                    let pname = identifier(head, "predicate name")?.to_string();
                    let ps = params(&items[1..], &pname, &domain.types)?;
                    if domain.predicates.contains_key(&pname) {
                        return Err(ParseError::invalid(decl.pos(), format!("predicate `{pname}` declared twice")));
                    }
                    domain.predicates.insert(pname.clone(), PredicateDecl { name: pname, params: ps });
                }
            }
            ":action" => {
                let schema = action(body, section.pos(), &domain.types, &domain.predicates)?;
                if domain.actions.contains_key(&schema.name) {
                    return Err(ParseError::invalid(section.pos(), format!("action `{}` defined twice", schema.name)));
                }
                domain.actions.insert(schema.name.clone(), schema);
            }
            other => return Err(ParseError::unsupported(section.pos(), format!("domain section `{other}`"))),
        }
    }
    Ok(domain)
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let root = tokenize_and_read(text)?;
    let (name, sections) = define(&root, "problem")?;
    let mut problem = Problem { name, ..Problem::default() };
    let mut init_seen = Vec::new();
    let mut goal_seen = Vec::new();
    for section in sections {
        let (kw, body) = section_keyword(section)?;
        match kw {
            ":domain" => match body {
                [d] => problem.domain = identifier(d, "domain name")?.to_string(),
                _ => return Err(ParseError::expected(section.pos(), "`(:domain NAME)`", section.describe())),
            },
            ":requirements" => requirements(body)?,
            ":objects" => {
                for (obj, ty, pos) in typed_list(body, false)? {
                    if problem.objects.insert(obj.clone(), ty).is_some() {
                        return Err(ParseError::invalid(pos, format!("object `{obj}` declared twice")));
                    }
                }
            }
            ":init" => {
                for a in body {
                    if head_of(a) == Some("not") || head_of(a) == Some("=") {
                        return Err(ParseError::unsupported(a.pos(), "non-atomic initial state entries"));
                    }
                    let atom = ground_atom(a)?;
                    init_seen.push((atom.clone(), a.pos()));
                    problem.init.insert(atom);
                }
            }
            ":goal" => match body {
                [g] => {
                    for a in conjunction(g, "goal")? {
                        let atom = ground_atom(a)?;
                        goal_seen.push((atom.clone(), a.pos()));
                        problem.goal.insert(atom);
                    }
                }
                _ => return Err(ParseError::expected(section.pos(), "`(:goal CONDITION)`", section.describe())),
            },
            other => return Err(ParseError::unsupported(section.pos(), format!("problem section `{other}`"))),
        }
    }
    for (atom, pos) in init_seen.iter().chain(&goal_seen) {
        for o in atom.objects() {
            if !problem.objects.contains_key(o) {
                return Err(ParseError::invalid(*pos, format!("object `{o}` in {atom} is not declared")));
            }
        }
    }
    Ok(problem)
}
