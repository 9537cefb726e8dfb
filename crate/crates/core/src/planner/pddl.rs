//! PDDL 2.1 export of the current mission state, plus a grammar checker for
//! the subset this module emits.
//!
//! Each task definition becomes one durative action. Robot task actions take
//! a `?r - robot` parameter; tasks that need the pit crew also take a
//! `?c - crew` slot, one crew object per unit of pit crew capacity. The
//! single operator is the `(operator-free)` fact. Time windows are facts
//! opened and closed by timed initial literals, and tasks already running
//! are completed by a timed literal at their remaining duration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{DepScope, Resource, Seconds, TaskDef, TaskGraph, TaskStatus};

pub const DOMAIN_NAME: &str = "copilot-mission";

/// PDDL-safe form of an identifier.
pub fn pddl_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

fn num(x: Seconds) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        let s = format!("{r:.3}");
        s.trim_end_matches('0').to_string()
    }
}

struct DefInfo<'a> {
    def: &'a TaskDef,
    per_robot: bool,
}

fn collect_defs(graph: &TaskGraph) -> Vec<DefInfo<'_>> {
    let order: Vec<_> = match graph.topological_order() {
        Ok(o) => o,
        Err(_) => graph.tasks.keys().cloned().collect(),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for id in &order {
        let t = &graph.tasks[id];
        if seen.insert(t.def.id.clone()) {
            out.push(DefInfo { def: &t.def, per_robot: t.robot.is_some() });
        }
    }
    out
}

/// Domain and problem text for `graph` at mission time `now`.
pub fn export_pddl(graph: &TaskGraph, now: Seconds, pit_crew_capacity: u32) -> (String, String) {
    let defs = collect_defs(graph);
    (domain_text(&defs), problem_text(&defs, graph, now, pit_crew_capacity))
}

fn domain_text(defs: &[DefInfo<'_>]) -> String {
    // Dependency targets may name robot task defs absent from a robot-less graph.
    let mut predicates: BTreeMap<String, bool> = BTreeMap::new();
    for d in defs {
        predicates.insert(d.def.id.clone(), d.per_robot);
        for dep in &d.def.deps {
            let per_robot = match dep.scope {
                DepScope::Base => false,
                DepScope::SameRobot | DepScope::AllRobots => true,
            };
            predicates.entry(dep.task.clone()).or_insert(per_robot);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {DOMAIN_NAME})");
    let _ = writeln!(
        s,
        "  (:requirements :strips :typing :durative-actions :timed-initial-literals :universal-preconditions)"
    );
    let _ = writeln!(s, "  (:types robot crew)");
    let _ = writeln!(s, "  (:predicates");
    let _ = writeln!(s, "    (operator-free)");
    let _ = writeln!(s, "    (crew-free ?c - crew)");
    let ordered: Vec<(String, bool)> = {
        let mut v: Vec<(String, bool)> = defs.iter().map(|d| (d.def.id.clone(), d.per_robot)).collect();
        for (id, per_robot) in &predicates {
            if !v.iter().any(|(x, _)| x == id) {
                v.push((id.clone(), *per_robot));
            }
        }
        v
    };
    for (id, per_robot) in &ordered {
        let n = pddl_name(id);
        let arg = if *per_robot { " ?r - robot" } else { "" };
        let _ = writeln!(s, "    (pending-{n}{arg})");
        let _ = writeln!(s, "    (ongoing-{n}{arg})");
        let _ = writeln!(s, "    (done-{n}{arg})");
        let _ = writeln!(s, "    (window-{n})");
    }
    let _ = writeln!(s, "  )");
    for d in defs {
        s.push_str(&action_text(d));
    }
    s.push_str(")\n");
    s
}

fn action_text(d: &DefInfo<'_>) -> String {
    let def = d.def;
    let n = pddl_name(&def.id);
    let arg = if d.per_robot { " ?r" } else { "" };
    let resource = def.gate.resource();
    let mut params = Vec::new();
    if d.per_robot {
        params.push("?r - robot");
    }
    if resource == Some(Resource::PitCrew) {
        params.push("?c - crew");
    }
    let mut cond = vec![format!("(at start (pending-{n}{arg}))")];
    for dep in &def.deps {
        let m = pddl_name(&dep.task);
        cond.push(match dep.scope {
            DepScope::SameRobot => format!("(at start (done-{m} ?r))"),
            DepScope::Base => format!("(at start (done-{m}))"),
            DepScope::AllRobots => format!("(at start (forall (?o - robot) (done-{m} ?o)))"),
        });
    }
    let mut eff = vec![format!("(at start (not (pending-{n}{arg})))"), format!("(at end (done-{n}{arg}))")];
    match resource {
        Some(Resource::Operator) => {
            cond.push("(at start (operator-free))".into());
            eff.push("(at start (not (operator-free)))".into());
            eff.push("(at end (operator-free))".into());
        }
        Some(Resource::PitCrew) => {
            cond.push("(at start (crew-free ?c))".into());
            eff.push("(at start (not (crew-free ?c)))".into());
            eff.push("(at end (crew-free ?c))".into());
        }
        None => {}
    }
    cond.push(format!("(at start (window-{n}))"));
    cond.push(format!("(over all (window-{n}))"));
    cond.push(format!("(at end (window-{n}))"));
    let mut s = String::new();
    let _ = writeln!(s, "  (:durative-action {n}");
    let _ = writeln!(s, "    :parameters ({})", params.join(" "));
    let _ = writeln!(s, "    :duration (= ?duration {})", num(def.duration));
    let _ = writeln!(s, "    :condition (and");
    for c in &cond {
        let _ = writeln!(s, "      {c}");
    }
    let _ = writeln!(s, "    )");
    let _ = writeln!(s, "    :effect (and");
    for e in &eff {
        let _ = writeln!(s, "      {e}");
    }
    let _ = writeln!(s, "    )");
    let _ = writeln!(s, "  )");
    s
}

fn problem_text(defs: &[DefInfo<'_>], graph: &TaskGraph, now: Seconds, pit_crew_capacity: u32) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {DOMAIN_NAME}-t{})", num(now).replace('.', "-"));
    let _ = writeln!(s, "  (:domain {DOMAIN_NAME})");
    let robots: Vec<String> = graph.robots.iter().map(|r| pddl_name(r.as_str())).collect();
    let crews: Vec<String> = (1..=pit_crew_capacity).map(|i| format!("crew{i}")).collect();
    let mut objects = Vec::new();
    if !robots.is_empty() {
        objects.push(format!("{} - robot", robots.join(" ")));
    }
    if !crews.is_empty() {
        objects.push(format!("{} - crew", crews.join(" ")));
    }
    let _ = writeln!(s, "  (:objects {})", objects.join(" "));

    let mut facts: Vec<String> = Vec::new();
    let mut timed: Vec<(Seconds, String)> = Vec::new();
    let mut operator_busy_until: Option<Seconds> = None;
    let mut crew_busy: Vec<Seconds> = Vec::new();

    for d in defs {
        let n = pddl_name(&d.def.id);
        let open = d.def.earliest_start - now;
        let close = d.def.latest_end - now;
        if close > 0.0 {
            if open <= 0.0 {
                facts.push(format!("(window-{n})"));
            } else {
                timed.push((open, format!("(window-{n})")));
            }
            timed.push((close, format!("(not (window-{n}))")));
        }
    }

    let order = graph.topological_order().unwrap_or_else(|_| graph.tasks.keys().cloned().collect());
    let mut goals = Vec::new();
    for id in &order {
        let t = &graph.tasks[id];
        let n = pddl_name(&t.def.id);
        let atom_args = t.robot.as_ref().map(|r| format!(" {}", pddl_name(r.as_str()))).unwrap_or_default();
        goals.push(format!("(done-{n}{atom_args})"));
        match t.status {
            TaskStatus::Succeeded => facts.push(format!("(done-{n}{atom_args})")),
            // A failed task must be run again before its successors can proceed.
            TaskStatus::Pending | TaskStatus::Failed => facts.push(format!("(pending-{n}{atom_args})")),
            TaskStatus::Active | TaskStatus::AwaitingGate => {
                let elapsed = now - t.started_at.unwrap_or(now);
                let remaining = (t.def.duration + t.deadline_extension - elapsed).max(0.001);
                facts.push(format!("(ongoing-{n}{atom_args})"));
                timed.push((remaining, format!("(not (ongoing-{n}{atom_args}))")));
                timed.push((remaining, format!("(done-{n}{atom_args})")));
                match t.def.gate.resource() {
                    Some(Resource::Operator) => {
                        operator_busy_until = Some(operator_busy_until.map_or(remaining, |x: f64| x.max(remaining)));
                    }
                    Some(Resource::PitCrew) => crew_busy.push(remaining),
                    None => {}
                }
            }
        }
    }

    match operator_busy_until {
        Some(t) => timed.push((t, "(operator-free)".into())),
        None => facts.insert(0, "(operator-free)".into()),
    }
    crew_busy.sort_by(f64::total_cmp);
    for (i, c) in crews.iter().enumerate() {
        match crew_busy.get(i) {
            Some(&t) => timed.push((t, format!("(crew-free {c})"))),
            None => facts.insert(i + usize::from(operator_busy_until.is_none()), format!("(crew-free {c})")),
        }
    }
    timed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let _ = writeln!(s, "  (:init");
    for f in &facts {
        let _ = writeln!(s, "    {f}");
    }
    for (t, lit) in &timed {
        let _ = writeln!(s, "    (at {} {lit})", num(*t));
    }
    let _ = writeln!(s, "  )");
    if goals.is_empty() {
        let _ = writeln!(s, "  (:goal (and))");
    } else {
        let _ = writeln!(s, "  (:goal (and");
        for g in &goals {
            let _ = writeln!(s, "    {g}");
        }
        let _ = writeln!(s, "  ))");
    }
    let _ = writeln!(s, "  (:metric minimize (total-time))");
    s.push_str(")\n");
    s
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct PddlError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Atom(..) => None,
        }
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, PddlError> {
    Err(PddlError { line, message: message.into() })
}

fn parse_sexp(text: &str) -> Result<Sexp, PddlError> {
    let mut tokens: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("");
        let spaced = line.replace('(', " ( ").replace(')', " ) ");
        tokens.extend(spaced.split_whitespace().map(|t| (t.to_ascii_lowercase(), i + 1)));
    }
    let mut pos = 0;
    let expr = parse_tokens(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return err(tokens[pos].1, "trailing input after top-level expression");
    }
    Ok(expr)
}

fn parse_tokens(tokens: &[(String, usize)], pos: &mut usize) -> Result<Sexp, PddlError> {
    let Some((tok, line)) = tokens.get(*pos) else {
        return err(tokens.last().map_or(1, |t| t.1), "unexpected end of input");
    };
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return err(*line, "unbalanced parenthesis"),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *line));
                    }
                    Some(_) => items.push(parse_tokens(tokens, pos)?),
                }
            }
        }
        ")" => err(*line, "unexpected `)`"),
        _ => Ok(Sexp::Atom(tok.clone(), *line)),
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn is_var(s: &str) -> bool {
    s.strip_prefix('?').is_some_and(is_name)
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok_and(|x| x.is_finite())
}

/// `a b - t c - u` into (name, type) pairs; untyped names get `object`.
fn typed_list(items: &[Sexp], vars: bool) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        let a = item.atom().ok_or_else(|| PddlError { line: item.line(), message: "expected a name".into() })?;
        if a == "-" {
            let ty = items
                .get(i + 1)
                .and_then(Sexp::atom)
                .filter(|t| is_name(t))
                .ok_or_else(|| PddlError { line: item.line(), message: "expected a type after `-`".into() })?;
            if pending.is_empty() {
                return err(item.line(), "type annotation without names");
            }
            out.extend(pending.drain(..).map(|n| (n, ty.to_string())));
            i += 2;
            continue;
        }
        let ok = if vars { is_var(a) } else { is_name(a) };
        if !ok {
            return err(item.line(), format!("invalid {} `{a}`", if vars { "variable" } else { "name" }));
        }
        pending.push(a.to_string());
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

/// Declarations extracted from a checked domain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DomainInfo {
    pub name: String,
    pub requirements: BTreeSet<String>,
    pub types: BTreeSet<String>,
    /// Predicate name to parameter types.
    pub predicates: BTreeMap<String, Vec<String>>,
    /// Action name to duration.
    pub actions: BTreeMap<String, f64>,
}

const KNOWN_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":equality",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":fluents",
    ":adl",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":timed-initial-literals",
];

fn header<'a>(items: &'a [Sexp], keyword: &str) -> Result<(&'a str, &'a [Sexp]), PddlError> {
    let top_line = items.first().map_or(1, Sexp::line);
    if items.first().and_then(Sexp::atom) != Some("define") {
        return err(top_line, "expected `(define ...)`");
    }
    let head = items.get(1).and_then(Sexp::list).unwrap_or(&[]);
    match head {
        [Sexp::Atom(k, _), Sexp::Atom(name, _)] if k == keyword && is_name(name) => Ok((name, &items[2..])),
        _ => err(top_line, format!("expected `({keyword} <name>)`")),
    }
}

pub fn check_domain(text: &str) -> Result<DomainInfo, PddlError> {
    let top = parse_sexp(text)?;
    let items = top.list().ok_or_else(|| PddlError { line: top.line(), message: "expected a list".into() })?;
    let (name, sections) = header(items, "domain")?;
    let mut info = DomainInfo { name: name.to_string(), ..DomainInfo::default() };
    info.types.insert("object".into());
    for sec in sections {
        let body = sec.list().ok_or_else(|| PddlError { line: sec.line(), message: "expected a section".into() })?;
        let key = body.first().and_then(Sexp::atom).unwrap_or("");
        match key {
            ":requirements" => {
                for r in &body[1..] {
                    let a = r.atom().unwrap_or("");
                    if !KNOWN_REQUIREMENTS.contains(&a) {
                        return err(r.line(), format!("unknown requirement `{a}`"));
                    }
                    info.requirements.insert(a.to_string());
                }
            }
            ":types" => {
                for (t, parent) in typed_list(&body[1..], false)? {
                    info.types.insert(t);
                    info.types.insert(parent);
                }
            }
            ":predicates" => {
                for p in &body[1..] {
                    let decl = p.list().unwrap_or(&[]);
                    let pname = decl.first().and_then(Sexp::atom).filter(|n| is_name(n));
                    let Some(pname) = pname else {
                        return err(p.line(), "malformed predicate declaration");
                    };
                    let params = typed_list(&decl[1..], true)?;
                    for (_, t) in &params {
                        if !info.types.contains(t) {
                            return err(p.line(), format!("undeclared type `{t}`"));
                        }
                    }
                    if info.predicates.insert(pname.to_string(), params.into_iter().map(|(_, t)| t).collect()).is_some() {
                        return err(p.line(), format!("duplicate predicate `{pname}`"));
                    }
                }
            }
            ":durative-action" => check_action(body, &mut info)?,
            other => return err(sec.line(), format!("unsupported domain section `{other}`")),
        }
    }
    if !info.actions.is_empty() && !info.requirements.contains(":durative-actions") {
        return err(top.line(), "durative actions used without :durative-actions");
    }
    Ok(info)
}

fn check_action(body: &[Sexp], info: &mut DomainInfo) -> Result<(), PddlError> {
    let line = body[0].line();
    let name = body.get(1).and_then(Sexp::atom).filter(|n| is_name(n));
    let Some(name) = name else {
        return err(line, "durative action needs a name");
    };
    let mut fields: BTreeMap<&str, &Sexp> = BTreeMap::new();
    let mut i = 2;
    while i < body.len() {
        let key = body[i].atom().filter(|k| k.starts_with(':'));
        let (Some(key), Some(value)) = (key, body.get(i + 1)) else {
            return err(body[i].line(), "expected `:keyword value` pairs");
        };
        fields.insert(key, value);
        i += 2;
    }
    for required in [":parameters", ":duration", ":condition", ":effect"] {
        if !fields.contains_key(required) {
            return err(line, format!("action `{name}` lacks {required}"));
        }
    }
    let params = typed_list(fields[":parameters"].list().unwrap_or(&[]), true)?;
    let mut scope: BTreeMap<String, String> = BTreeMap::new();
    for (v, t) in params {
        if !info.types.contains(&t) {
            return err(line, format!("undeclared type `{t}`"));
        }
        scope.insert(v, t);
    }
    let duration = match fields[":duration"].list() {
        Some([Sexp::Atom(eq, _), Sexp::Atom(d, _), Sexp::Atom(v, _)]) if eq == "=" && d == "?duration" && is_number(v) => {
            v.parse::<f64>().expect("checked number")
        }
        _ => return err(fields[":duration"].line(), "duration must be `(= ?duration <number>)`"),
    };
    if duration <= 0.0 {
        return err(fields[":duration"].line(), "duration must be positive");
    }
    check_timed_condition(fields[":condition"], info, &scope)?;
    check_timed_effect(fields[":effect"], info, &scope)?;
    if info.actions.insert(name.to_string(), duration).is_some() {
        return err(line, format!("duplicate action `{name}`"));
    }
    Ok(())
}

fn check_atom(
    atom: &[Sexp],
    line: usize,
    info: &DomainInfo,
    scope: &BTreeMap<String, String>,
    objects: Option<&BTreeMap<String, String>>,
) -> Result<(), PddlError> {
    let pname = atom.first().and_then(Sexp::atom).unwrap_or("");
    let Some(types) = info.predicates.get(pname) else {
        return err(line, format!("undeclared predicate `{pname}`"));
    };
    let args = &atom[1..];
    if args.len() != types.len() {
        return err(line, format!("`{pname}` takes {} argument(s), got {}", types.len(), args.len()));
    }
    for (a, want) in args.iter().zip(types) {
        let a = a.atom().ok_or_else(|| PddlError { line, message: "nested term in atom".into() })?;
        let have = if is_var(a) {
            scope.get(a).ok_or_else(|| PddlError { line, message: format!("unbound variable `{a}`") })?
        } else if let Some(objs) = objects {
            objs.get(a).ok_or_else(|| PddlError { line, message: format!("unknown object `{a}`") })?
        } else {
            return err(line, format!("constant `{a}` in domain"));
        };
        if have != want && want != "object" {
            return err(line, format!("`{a}` has type {have}, `{pname}` expects {want}"));
        }
    }
    Ok(())
}

fn check_gd(
    gd: &Sexp,
    info: &DomainInfo,
    scope: &BTreeMap<String, String>,
    objects: Option<&BTreeMap<String, String>>,
) -> Result<(), PddlError> {
    let line = gd.line();
    let items = gd.list().ok_or_else(|| PddlError { line, message: "expected a condition".into() })?;
    match items.first().and_then(Sexp::atom) {
        Some("and") => items[1..].iter().try_for_each(|g| check_gd(g, info, scope, objects)),
        Some("not") => {
            if !info.requirements.contains(":negative-preconditions") && objects.is_none() {
                return err(line, "negative condition without :negative-preconditions");
            }
            match &items[1..] {
                [inner] => check_gd(inner, info, scope, objects),
                _ => err(line, "`not` takes one argument"),
            }
        }
        Some("forall") => {
            if !info.requirements.contains(":universal-preconditions") && !info.requirements.contains(":adl") {
                return err(line, "forall without :universal-preconditions");
            }
            let [_, vars, body] = items else {
                return err(line, "`forall` takes a variable list and a body");
            };
            let mut inner = scope.clone();
            for (v, t) in typed_list(vars.list().unwrap_or(&[]), true)? {
                if !info.types.contains(&t) {
                    return err(line, format!("undeclared type `{t}`"));
                }
                inner.insert(v, t);
            }
            check_gd(body, info, &inner, objects)
        }
        _ => check_atom(items, line, info, scope, objects),
    }
}

fn check_literal(lit: &Sexp, info: &DomainInfo, scope: &BTreeMap<String, String>, objects: Option<&BTreeMap<String, String>>) -> Result<(), PddlError> {
    let line = lit.line();
    let items = lit.list().ok_or_else(|| PddlError { line, message: "expected a literal".into() })?;
    match items {
        [Sexp::Atom(not, _), inner] if not == "not" => {
            let atom = inner.list().ok_or_else(|| PddlError { line, message: "expected an atom".into() })?;
            check_atom(atom, line, info, scope, objects)
        }
        _ => check_atom(items, line, info, scope, objects),
    }
}

fn check_timed_condition(c: &Sexp, info: &DomainInfo, scope: &BTreeMap<String, String>) -> Result<(), PddlError> {
    let line = c.line();
    let items = c.list().ok_or_else(|| PddlError { line, message: "expected a condition".into() })?;
    match items {
        [] => Ok(()),
        [Sexp::Atom(a, _), rest @ ..] if a == "and" => rest.iter().try_for_each(|x| check_timed_condition(x, info, scope)),
        [Sexp::Atom(a, _), Sexp::Atom(when, _), gd] if a == "at" && (when == "start" || when == "end") => {
            check_gd(gd, info, scope, None)
        }
        [Sexp::Atom(o, _), Sexp::Atom(all, _), gd] if o == "over" && all == "all" => check_gd(gd, info, scope, None),
        _ => err(line, "condition must be `(at start|end ...)` or `(over all ...)`"),
    }
}

fn check_timed_effect(e: &Sexp, info: &DomainInfo, scope: &BTreeMap<String, String>) -> Result<(), PddlError> {
    let line = e.line();
    let items = e.list().ok_or_else(|| PddlError { line, message: "expected an effect".into() })?;
    match items {
        [] => Ok(()),
        [Sexp::Atom(a, _), rest @ ..] if a == "and" => rest.iter().try_for_each(|x| check_timed_effect(x, info, scope)),
        [Sexp::Atom(a, _), Sexp::Atom(when, _), lit] if a == "at" && (when == "start" || when == "end") => {
            check_literal(lit, info, scope, None)
        }
        _ => err(line, "effect must be `(at start|end <literal>)`"),
    }
}

/// A timed initial literal from a checked problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedLiteral {
    pub at: f64,
    pub positive: bool,
    pub atom: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemInfo {
    pub name: String,
    pub objects: BTreeMap<String, String>,
    pub init: Vec<String>,
    pub timed: Vec<TimedLiteral>,
    pub goal_atoms: usize,
}

fn render(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a, _) => a.clone(),
        Sexp::List(v, _) => format!("({})", v.iter().map(render).collect::<Vec<_>>().join(" ")),
    }
}

fn count_atoms(gd: &Sexp) -> usize {
    match gd.list() {
        Some([Sexp::Atom(a, _), rest @ ..]) if a == "and" => rest.iter().map(count_atoms).sum(),
        _ => 1,
    }
}

/// Check a problem against an already-checked domain.
pub fn check_problem(text: &str, domain: &DomainInfo) -> Result<ProblemInfo, PddlError> {
    let top = parse_sexp(text)?;
    let items = top.list().ok_or_else(|| PddlError { line: top.line(), message: "expected a list".into() })?;
    let (name, sections) = header(items, "problem")?;
    let mut info = ProblemInfo { name: name.to_string(), ..ProblemInfo::default() };
    let mut has_goal = false;
    let empty = BTreeMap::new();
    for sec in sections {
        let body = sec.list().ok_or_else(|| PddlError { line: sec.line(), message: "expected a section".into() })?;
        let key = body.first().and_then(Sexp::atom).unwrap_or("");
        match key {
            ":domain" => match &body[1..] {
                [Sexp::Atom(d, _)] if *d == domain.name => {}
                _ => return err(sec.line(), format!("problem must reference domain `{}`", domain.name)),
            },
            ":objects" => {
                for (o, t) in typed_list(&body[1..], false)? {
                    if !domain.types.contains(&t) {
                        return err(sec.line(), format!("undeclared type `{t}`"));
                    }
                    info.objects.insert(o, t);
                }
            }
            ":init" => {
                for el in &body[1..] {
                    let parts = el.list().ok_or_else(|| PddlError { line: el.line(), message: "expected an init element".into() })?;
                    match parts {
                        [Sexp::Atom(at, _), Sexp::Atom(t, _), lit] if at == "at" && is_number(t) => {
                            if !domain.requirements.contains(":timed-initial-literals") {
                                return err(el.line(), "timed literal without :timed-initial-literals");
                            }
                            let time: f64 = t.parse().expect("checked number");
                            if time < 0.0 {
                                return err(el.line(), "timed literal at negative time");
                            }
                            check_literal(lit, domain, &empty, Some(&info.objects))?;
                            let (positive, atom) = match lit.list() {
                                Some([Sexp::Atom(n, _), inner]) if n == "not" => (false, render(inner)),
                                _ => (true, render(lit)),
                            };
                            info.timed.push(TimedLiteral { at: time, positive, atom });
                        }
                        _ => {
                            check_atom(parts, el.line(), domain, &empty, Some(&info.objects))?;
                            info.init.push(render(el));
                        }
                    }
                }
            }
            ":goal" => {
                let [_, gd] = body else {
                    return err(sec.line(), "`:goal` takes one condition");
                };
                check_gd(gd, domain, &empty, Some(&info.objects))?;
                info.goal_atoms = if gd.list().is_some_and(|l| l.len() == 1) { 0 } else { count_atoms(gd) };
                has_goal = true;
            }
            ":metric" => match &body[1..] {
                [Sexp::Atom(dir, _), expr] if (dir == "minimize" || dir == "maximize") && expr.list().is_some() => {}
                _ => return err(sec.line(), "malformed metric"),
            },
            other => return err(sec.line(), format!("unsupported problem section `{other}`")),
        }
    }
    if !has_goal {
        return err(top.line(), "problem has no goal");
    }
    Ok(info)
}

/// Check a domain/problem pair.
pub fn check_pddl(domain: &str, problem: &str) -> Result<(DomainInfo, ProblemInfo), PddlError> {
    let d = check_domain(domain)?;
    let p = check_problem(problem, &d)?;
    Ok((d, p))
}
