use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::Context;
use serde_json::Value;
use sobench::metrics::{format_percent, render_rows, ReportFormat};
use sobench::sandbox::Outcome;

use crate::cli::StatsArgs;
use crate::io::open_input;

#[derive(Debug, Default)]
struct Summary {
    kind: &'static str,
    lines: u64,
    groups: BTreeMap<String, u64>,
    tokens: u64,
    errors: u64,
    outcomes: BTreeMap<String, BTreeMap<&'static str, u64>>,
}

fn kind_of(record: &serde_json::Map<String, Value>) -> &'static str {
    if record.contains_key("outcome") {
        "results"
    } else if record.contains_key("window_index") {
        "windows"
    } else if record.contains_key("approx_tokens") {
        "corpus"
    } else if record.contains_key("sample_index") {
        "completions"
    } else {
        "unknown"
    }
}

fn summarise(path: &Path) -> anyhow::Result<Summary> {
    let mut s = Summary::default();
    for (i, line) in open_input(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: not JSON", path.display(), i + 1))?;
        let Value::Object(record) = value else {
            anyhow::bail!("{}:{}: not a JSON object", path.display(), i + 1);
        };
        if s.lines == 0 {
            s.kind = kind_of(&record);
        }
        s.lines += 1;
        let text = |field: &str| record.get(field).map(|v| v.to_string()).unwrap_or_default();
        let number = |field: &str| record.get(field).and_then(Value::as_u64).unwrap_or(0);
        match s.kind {
            "corpus" => {
                *s.groups.entry(text("question_id")).or_default() += 1;
                s.tokens += number("approx_tokens");
            }
            "windows" => s.tokens += number("tokens"),
            "completions" => {
                *s.groups.entry(text("task_id")).or_default() += 1;
                s.errors += u64::from(record.get("error").is_some_and(|e| !e.is_null()));
            }
            "results" => {
                let outcome: Outcome = record
                    .get("outcome")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
                *s.outcomes.entry(text("temperature")).or_default().entry(outcome.as_str()).or_default() += 1;
            }
            _ => {}
        }
    }
    Ok(s)
}

pub fn run(args: StatsArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    for path in &args.files {
        let s = summarise(path)?;
        writeln!(out, "{} ({}, {} lines)", path.display(), if s.lines == 0 { "empty" } else { s.kind }, s.lines)?;
        match s.kind {
            "corpus" => writeln!(out, "  {} questions, {} approx tokens", s.groups.len(), s.tokens)?,
            "windows" => writeln!(out, "  {} tokens", s.tokens)?,
            "completions" => writeln!(out, "  {} tasks, {} generation errors", s.groups.len(), s.errors)?,
            "results" => {
                let header: Vec<String> =
                    std::iter::once("T".to_owned()).chain(Outcome::ALL.iter().map(|o| o.as_str().to_owned())).collect();
                let rows: Vec<Vec<String>> = s
                    .outcomes
                    .iter()
                    .map(|(t, counts)| {
                        let total: u64 = counts.values().sum();
                        std::iter::once(t.clone())
                            .chain(Outcome::ALL.iter().map(|o| {
                                let c = counts.get(o.as_str()).copied().unwrap_or(0);
                                format!("{c} ({}%)", format_percent(c as f64 / total as f64))
                            }))
                            .collect()
                    })
                    .collect();
                write!(out, "{}", render_rows(&header, &rows, ReportFormat::Markdown))?;
            }
            _ => {}
        }
    }
    Ok(())
}
