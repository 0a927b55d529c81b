use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::{advance, NamedTrace, Trace, TraceHeader, TraceStep, FORMAT_TAG};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("{file}line {line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{file}line {line}: unknown trace format `{found}` (expected `{FORMAT_TAG}`)")]
    Version { file: String, line: usize, found: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl TraceError {
    fn format(line: usize, message: impl Into<String>) -> Self {
        TraceError::Format { file: String::new(), line, message: message.into() }
    }

    fn in_file(self, path: &Path) -> Self {
        let file = format!("{}: ", path.display());
        match self {
            TraceError::Format { line, message, .. } => TraceError::Format { file, line, message },
            TraceError::Version { line, found, .. } => TraceError::Version { file, line, found },
            other => other,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            TraceError::Format { line, .. } | TraceError::Version { line, .. } => Some(*line),
            TraceError::Io(_) => None,
        }
    }
}

fn parse_header(line: &str) -> Result<TraceHeader, TraceError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| TraceError::format(1, e.to_string()))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(FORMAT_TAG) => {}
        Some(other) => return Err(TraceError::Version { file: String::new(), line: 1, found: other.to_string() }),
        None => return Err(TraceError::format(1, "header lacks a `format` tag")),
    }
    serde_json::from_value(value).map_err(|e| TraceError::format(1, e.to_string()))
}

/// Reads a `gtrace-1` trace. Deltas are checked against the state they
/// apply to, so a delete of an absent atom is reported with its line.
pub fn read_trace<R: Read>(reader: R) -> Result<Trace, TraceError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        None => return Err(TraceError::format(1, "empty trace: missing header line")),
        Some((_, line)) => {
            let line = line?;
            if line.trim().is_empty() {
                return Err(TraceError::format(1, "empty header line"));
            }
            parse_header(&line)?
        }
    };
    let mut trace = Trace::new(header);
    let mut current = trace.header.init.clone();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let step: TraceStep = serde_json::from_str(&line).map_err(|e| TraceError::format(lineno, e.to_string()))?;
        if step.delta.is_none() && step.state.is_none() {
            return Err(TraceError::format(lineno, "step carries neither `delta` nor `state`"));
        }
        // Full states are compared against deltas by `reconstruct_states`;
        // only the delta invariants are enforced while reading.
        let delta_only = TraceStep { state: None, ..step.clone() };
        current = match (&step.delta, &step.state) {
            (Some(_), _) => advance(&current, &delta_only).map_err(|e| TraceError::format(lineno, e.reason))?,
            (None, Some(s)) => s.clone(),
            (None, None) => unreachable!(),
        };
        trace.steps.push(step);
    }
    Ok(trace)
}

pub fn read_trace_str(text: &str) -> Result<Trace, TraceError> {
    read_trace(text.as_bytes())
}

pub fn write_trace<W: Write>(t: &Trace, mut w: W) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &t.header)?;
    w.write_all(b"\n")?;
    for step in &t.steps {
        serde_json::to_writer(&mut w, step)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_trace_string(t: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(t, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Loads every `*.jsonl` file in `dir`, sorted by file name.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<NamedTrace>, TraceError> {
    let mut paths: Vec<PathBuf> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl")).collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let file = std::fs::File::open(&p)?;
            let trace = read_trace(file).map_err(|e| e.in_file(&p))?;
            let id = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(NamedTrace::new(id, trace))
        })
        .collect()
}
