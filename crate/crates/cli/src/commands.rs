use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use gtp_core::aml::learn_domain;
use gtp_core::consistency::check_consistency;
use gtp_core::pddl::{parse_domain, parse_plan, parse_problem, print_domain, print_plan, print_problem, Domain, Plan, Problem};
use gtp_core::planner::{plan_gbfs, plan_optimal, random_walk, Limits, Outcome};
use gtp_core::scenario::{dead_end_scan, instantiate_from, shortcut_check, GoalTemplate, ShortcutVerdict, StartState};
use gtp_core::sim::{self, execute_plan, export_problem, load_map, maps, record_session, scripted_playthrough, Direction, GameMap, Policy};
use gtp_core::trace::{load_trace_dir, write_trace};

use crate::{Command, LimitArgs, PolicyArg, SimCommand};

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Learn { traces, out, report, name } => learn(&traces, &out, report.as_deref(), &name),
        Command::Check { domain, traces, report } => check(&domain, &traces, report.as_deref()),
        Command::Plan { domain, problem, out, optimal, bound, limits } => plan(&domain, &problem, &out, optimal, bound, limits),
        Command::Scenarios { domain, problem, template, out_dir, walk, seed } => scenarios(&domain, &problem, &template, &out_dir, walk, seed),
        Command::Deadends { domain, problem, template, seed, samples, walk, report, limits } => {
            deadends(&domain, &problem, template.as_deref(), seed, samples, walk, report.as_deref(), limits)
        }
        Command::Shortcut { domain, problem, bound, report, limits } => shortcut(&domain, &problem, bound, report.as_deref(), limits),
        Command::Sim(sub) => sim_cmd(sub),
        Command::Play { map, port, host, trace_dir, ui } => {
            let map = resolve_map(&map)?;
            crate::play::serve(map, &host, port, trace_dir, ui)?;
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Writes the report to `path`, or to stdout without one.
fn emit(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(value)? + "\n";
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("cannot write to stdout"),
                _ => Ok(()),
            }
        }
    }
}

fn load_domain(path: &Path) -> Result<Domain> {
    let d = parse_domain(&read(path)?).with_context(|| format!("{}", path.display()))?;
    d.check().with_context(|| format!("{}", path.display()))?;
    Ok(d)
}

fn load_problem(path: &Path, d: &Domain) -> Result<Problem> {
    let p = parse_problem(&read(path)?).with_context(|| format!("{}", path.display()))?;
    if p.domain != d.name {
        log::warn!("problem `{}` names domain `{}`, using `{}`", p.name, p.domain, d.name);
    }
    Ok(p)
}

fn limits(args: LimitArgs) -> Result<Limits> {
    let mut l = Limits::default();
    if let Some(n) = args.max_nodes {
        l.max_expansions = Some(n);
    }
    if let Some(s) = args.timeout {
        l.timeout = Some(Duration::try_from_secs_f64(s).context("--timeout must be a non-negative number of seconds")?);
    }
    Ok(l)
}

/// A map file, or one of the bundled maps as `builtin:NAME`.
pub fn resolve_map(spec: &str) -> Result<GameMap> {
    match spec.strip_prefix("builtin:") {
        Some("demo") => Ok(maps::demo()),
        Some("trap") => Ok(maps::trap()),
        Some("small") => Ok(maps::small()),
        Some(other) => bail!("no bundled map `{other}` (expected demo, trap or small)"),
        None => Ok(load_map(Path::new(spec))?),
    }
}

fn learn(traces: &Path, out: &Path, report: Option<&Path>, name: &str) -> Result<u8> {
    let corpus = load_trace_dir(traces).with_context(|| format!("cannot load traces from {}", traces.display()))?;
    let (domain, rep) = learn_domain(&corpus, name)?;
    for w in &rep.warnings {
        log::warn!("{w}");
    }
    write(out, &print_domain(&domain))?;
    if let Some(r) = report {
        write_json(r, &rep)?;
    }
    let steps: usize = corpus.iter().map(|t| t.trace.steps.len()).sum();
    eprintln!("learned {} action schemas from {} traces ({} steps)", domain.actions.len(), corpus.len(), steps);
    Ok(0)
}

fn check(domain: &Path, traces: &Path, report: Option<&Path>) -> Result<u8> {
    let d = load_domain(domain)?;
    let corpus = load_trace_dir(traces).with_context(|| format!("cannot load traces from {}", traces.display()))?;
    let r = check_consistency(&d, &corpus)?;
    emit(report, &r)?;
    eprintln!("{:?}: {} findings over {} steps", r.verdict, r.findings.len(), r.steps);
    Ok(if r.is_consistent() { 0 } else { 1 })
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    #[serde(flatten)]
    outcome: &'a Outcome,
    stats: &'a gtp_core::planner::SearchStats,
}

fn plan(domain: &Path, problem: &Path, out: &Path, optimal: bool, bound: Option<usize>, l: LimitArgs) -> Result<u8> {
    let d = load_domain(domain)?;
    let p = load_problem(problem, &d)?;
    let r = if optimal { plan_optimal(&d, &p, bound, limits(l)?)? } else { plan_gbfs(&d, &p, limits(l)?)? };
    let code = match &r.outcome {
        Outcome::Plan { plan, .. } => {
            write(out, &print_plan(plan))?;
            0
        }
        Outcome::ProvedNoPlan | Outcome::ProvedNoPlanWithinBound { .. } => 1,
        Outcome::ResourceLimit { .. } => 3,
    };
    eprintln!("{}", serde_json::to_string(&PlanSummary { outcome: &summary_outcome(&r.outcome), stats: &r.stats })?);
    Ok(code)
}

/// The outcome without the plan body.
fn summary_outcome(o: &Outcome) -> Outcome {
    match o {
        Outcome::Plan { cost, .. } => Outcome::Plan { plan: Plan::default(), cost: *cost },
        other => other.clone(),
    }
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    file: String,
    problem: &'a str,
    binding: &'a std::collections::BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<&'a StartState>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    template: &'a str,
    domain: &'a str,
    problems: Vec<ManifestEntry<'a>>,
}

fn scenarios(domain: &Path, problem: &Path, template: &Path, out_dir: &Path, walk: Option<usize>, seed: Option<u64>) -> Result<u8> {
    let d = load_domain(domain)?;
    let p = load_problem(problem, &d)?;
    let t = GoalTemplate::from_json(&read(template)?).with_context(|| format!("{}", template.display()))?;
    let start = match (walk, seed) {
        (Some(steps), Some(seed)) => Some((random_walk(&d, &p, steps, seed)?, StartState { seed, steps })),
        _ => None,
    };
    let batch = instantiate_from(&d, &p, &t, start)?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut entries = Vec::new();
    for s in &batch.scenarios {
        let file = format!("{}.pddl", s.problem.name);
        write(&out_dir.join(&file), &print_problem(&s.problem))?;
        entries.push(ManifestEntry { file, problem: &s.problem.name, binding: &s.binding, start: s.start.as_ref() });
    }
    write_json(&out_dir.join("manifest.json"), &Manifest { template: &batch.template, domain: &d.name, problems: entries })?;
    eprintln!("wrote {} problems to {}", batch.scenarios.len(), out_dir.display());
    Ok(0)
}

#[derive(Serialize)]
struct GoalScan {
    problem: String,
    binding: std::collections::BTreeMap<String, String>,
    report: gtp_core::scenario::DeadEndReport,
}

#[allow(clippy::too_many_arguments)]
fn deadends(domain: &Path, problem: &Path, template: Option<&Path>, seed: u64, samples: usize, walk: usize, report: Option<&Path>, l: LimitArgs) -> Result<u8> {
    let d = load_domain(domain)?;
    let p = load_problem(problem, &d)?;
    let goals: Vec<(String, std::collections::BTreeMap<String, String>, _)> = match template {
        None => vec![(p.name.clone(), Default::default(), p.goal.clone())],
        Some(t) => {
            let t = GoalTemplate::from_json(&read(t)?).with_context(|| format!("{}", t.display()))?;
            instantiate_from(&d, &p, &t, None)?.scenarios.into_iter().map(|s| (s.problem.name, s.binding, s.problem.goal)).collect()
        }
    };
    let mut scans = Vec::new();
    for (name, binding, goal) in goals {
        let r = dead_end_scan(&d, &p, &goal, samples, walk, seed, limits(l)?)?;
        eprintln!("{name}: {} dead-ends, {} ok, {} unknown", r.dead_ends, r.ok, r.unknown);
        scans.push(GoalScan { problem: name, binding, report: r });
    }
    let dead: usize = scans.iter().map(|s| s.report.dead_ends).sum();
    let unknown: usize = scans.iter().map(|s| s.report.unknown).sum();
    if template.is_none() {
        emit(report, &scans[0].report)?;
    } else {
        emit(report, &scans)?;
    }
    Ok(if dead > 0 {
        1
    } else if unknown > 0 {
        3
    } else {
        0
    })
}

fn shortcut(domain: &Path, problem: &Path, bound: usize, report: Option<&Path>, l: LimitArgs) -> Result<u8> {
    let d = load_domain(domain)?;
    let p = load_problem(problem, &d)?;
    let r = shortcut_check(&d, &p, bound, limits(l)?)?;
    emit(report, &r)?;
    Ok(match r.verdict {
        ShortcutVerdict::NoShortcut => 0,
        ShortcutVerdict::ShortcutFound { .. } => 1,
        ShortcutVerdict::Inconclusive { .. } => 3,
    })
}

fn write_trace_file(path: &Path, t: &gtp_core::trace::Trace) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    write_trace(t, std::io::BufWriter::new(f))?;
    Ok(())
}

fn sim_cmd(cmd: SimCommand) -> Result<u8> {
    match cmd {
        SimCommand::Run { map, script, policy, seed, steps, trace } => {
            let map = resolve_map(&map)?;
            let t = match (script, policy) {
                (Some(s), _) => {
                    let dirs: Vec<Direction> = read(&s)?
                        .split_whitespace()
                        .map(|w| w.parse().map_err(anyhow::Error::msg))
                        .collect::<Result<_>>()
                        .with_context(|| format!("{}", s.display()))?;
                    record_session(&map, &dirs)
                }
                (None, Some(PolicyArg::Coverage)) => scripted_playthrough(&map, Policy::Coverage)?,
                (None, Some(PolicyArg::Random)) => {
                    let (Some(seed), Some(steps)) = (seed, steps) else {
                        bail!("the random policy needs --seed and --steps");
                    };
                    scripted_playthrough(&map, Policy::Random { seed, steps })?
                }
                (None, None) => bail!("give either --script or --policy"),
            };
            write_trace_file(&trace, &t)?;
            eprintln!("recorded {} steps to {}", t.steps.len(), trace.display());
            Ok(0)
        }
        SimCommand::Exec { map, plan, trace, report } => {
            let map = resolve_map(&map)?;
            let plan = parse_plan(&read(&plan)?).with_context(|| format!("{}", plan.display()))?;
            let r = execute_plan(&map, &plan)?;
            if let Some(t) = trace {
                write_trace_file(&t, &r.trace)?;
            }
            emit(report.as_deref(), &r)?;
            Ok(if r.is_success() { 0 } else { 1 })
        }
        SimCommand::ExportPddl { map, out, domain_out } => {
            let map = resolve_map(&map)?;
            write(&out, &print_problem(&export_problem(&map, None)))?;
            if let Some(d) = domain_out {
                write(&d, sim::REFERENCE_DOMAIN)?;
            }
            Ok(0)
        }
    }
}
