//! Plan files: one `(name arg ...)` per line, lowercase, `;` comments.

use super::{Plan, PlanStep};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("plan line {line}: {message}")]
pub struct PlanParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_plan(text: &str) -> Result<Plan, PlanParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| PlanParseError { line: i + 1, message: message.to_string() };
        let inner = line.strip_prefix('(').and_then(|l| l.strip_suffix(')')).ok_or_else(|| err("expected `(name args...)`"))?;
        if inner.contains('(') || inner.contains(')') {
            return Err(err("nested parentheses"));
        }
        let mut words = inner.split_whitespace().map(str::to_lowercase);
        let name = words.next().ok_or_else(|| err("missing action name"))?;
        steps.push(PlanStep { name, args: words.collect() });
    }
    Ok(Plan(steps))
}

pub fn print_plan(plan: &Plan) -> String {
    plan.steps().iter().map(|s| format!("{s}\n")).collect()
}
