//! Benchmark suites, prompts and program assembly.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("cannot read suite file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("unknown suite `{0}` (expected humaneval or mbpp)")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    HumanEval,
    Mbpp,
}

impl Suite {
    /// Size of the published evaluation split, used only for a sanity warning.
    pub fn standard_size(self) -> usize {
        match self {
            Suite::HumanEval => 164,
            Suite::Mbpp => 500,
        }
    }

    /// k values reported per suite.
    pub fn default_ks(self) -> Vec<u32> {
        match self {
            Suite::HumanEval => vec![1, 10, 100],
            Suite::Mbpp => vec![1, 10, 80],
        }
    }

    /// Stop sequences applied to completions before assembly.
    pub fn default_stops(self) -> Vec<String> {
        let stops: &[&str] = match self {
            Suite::HumanEval => &["\ndef ", "\nclass ", "\nif __name__", "\nprint("],
            Suite::Mbpp => &["\nassert ", "\nif __name__", "\nprint(", "\n```"],
        };
        stops.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::HumanEval => "humaneval",
            Suite::Mbpp => "mbpp",
        })
    }
}

impl FromStr for Suite {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "humaneval" => Ok(Suite::HumanEval),
            "mbpp" => Ok(Suite::Mbpp),
            _ => Err(TaskError::UnknownSuite(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskTests {
    /// A harness defining `check(candidate)`.
    CheckHarness { harness: String },
    /// Standalone assert statements, optionally preceded by setup code.
    Asserts { setup: Option<String>, lines: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTask {
    pub task_id: String,
    pub suite: Suite,
    /// HumanEval: signature plus docstring. MBPP: the problem statement.
    pub prompt_body: String,
    pub tests: TaskTests,
    pub entry_point: Option<String>,
    /// `canonical_solution` (HumanEval) or `code` (MBPP), when present.
    pub reference_solution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperatures: Vec<f64>,
    pub top_p: f64,
    pub num_samples: u32,
    pub max_new_tokens: u32,
    pub stop_sequences: Vec<String>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperatures: vec![0.2, 0.6, 0.8],
            top_p: 0.95,
            num_samples: 200,
            max_new_tokens: 300,
            stop_sequences: Vec::new(),
        }
    }
}

/// One sampled program, as stored in the completions JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub task_id: String,
    pub sample_index: u32,
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    pub text: String,
    /// Set when generation failed and `text` is a placeholder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn default_top_p() -> f64 {
    0.95
}

#[derive(Debug, Clone, Default)]
pub struct LoadedSuite {
    pub tasks: Vec<EvalTask>,
    pub warnings: Vec<String>,
}

fn field_str(obj: &serde_json::Map<String, Value>, line: usize, field: &'static str) -> Result<String, TaskError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Err(TaskError::MissingField { line, field }),
        Some(other) => Err(TaskError::Invalid { line, message: format!("field `{field}` must be a string, got {other}") }),
    }
}

fn task_id(obj: &serde_json::Map<String, Value>, line: usize) -> Result<String, TaskError> {
    match obj.get("task_id") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(Value::Null) | None => Err(TaskError::MissingField { line, field: "task_id" }),
        Some(other) => Err(TaskError::Invalid { line, message: format!("unsupported task_id {other}") }),
    }
}

fn parse_task(value: Value, suite: Suite, line: usize) -> Result<EvalTask, TaskError> {
    let Value::Object(obj) = value else {
        return Err(TaskError::Invalid { line, message: "expected a JSON object".into() });
    };
    let task_id = task_id(&obj, line)?;
    match suite {
        Suite::HumanEval => Ok(EvalTask {
            task_id,
            suite,
            prompt_body: field_str(&obj, line, "prompt")?,
            tests: TaskTests::CheckHarness { harness: field_str(&obj, line, "test")? },
            entry_point: Some(field_str(&obj, line, "entry_point")?),
            reference_solution: obj.get("canonical_solution").and_then(Value::as_str).map(str::to_string),
        }),
        Suite::Mbpp => {
            let lines = match obj.get("test_list") {
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| {
                        v.as_str().map(str::to_string).ok_or_else(|| TaskError::Invalid {
                            line,
                            message: "test_list entries must be strings".into(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                Some(Value::Null) | None => return Err(TaskError::MissingField { line, field: "test_list" }),
                Some(_) => {
                    return Err(TaskError::Invalid { line, message: "test_list must be an array".into() })
                }
            };
            if lines.is_empty() {
                return Err(TaskError::Invalid { line, message: "test_list is empty".into() });
            }
            let setup = obj
                .get("test_setup_code")
                .and_then(Value::as_str)
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string);
            Ok(EvalTask {
                task_id,
                suite,
                prompt_body: field_str(&obj, line, "text")?,
                tests: TaskTests::Asserts { setup, lines },
                entry_point: None,
                reference_solution: obj.get("code").and_then(Value::as_str).map(str::to_string),
            })
        }
    }
}

/// Parses suite JSONL. Unknown fields are ignored; a missing required field
/// fails the whole load with its 1-based line number.
pub fn parse_suite(input: &str, suite: Suite) -> Result<LoadedSuite, TaskError> {
    let mut tasks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| TaskError::Json { line: i + 1, message: e.to_string() })?;
        tasks.push(parse_task(value, suite, i + 1)?);
    }
    let mut warnings = Vec::new();
    if tasks.len() != suite.standard_size() {
        warnings.push(format!(
            "{suite} suite has {} tasks; the standard evaluation split has {}",
            tasks.len(),
            suite.standard_size()
        ));
    }
    Ok(LoadedSuite { tasks, warnings })
}

pub fn load_suite(path: &Path, suite: Suite) -> Result<LoadedSuite, TaskError> {
    let input = fs::read_to_string(path).map_err(|source| TaskError::Io { path: path.to_path_buf(), source })?;
    parse_suite(&input, suite)
}

/// The text sent to the model. HumanEval prompts are passed through
/// verbatim; MBPP prompts are the problem statement followed by its test
/// asserts, one per line, and a trailing newline as the completion cue.
pub fn build_prompt(task: &EvalTask, preamble: Option<&str>) -> String {
    let mut prompt = String::new();
    if let Some(pre) = preamble.filter(|p| !p.is_empty()) {
        prompt.push_str(pre);
        if !pre.ends_with('\n') {
            prompt.push('\n');
        }
    }
    match &task.tests {
        TaskTests::CheckHarness { .. } => prompt.push_str(&task.prompt_body),
        TaskTests::Asserts { lines, .. } => {
            prompt.push_str(task.prompt_body.trim_end());
            prompt.push('\n');
            for line in lines {
                prompt.push_str(line.trim_end());
                prompt.push('\n');
            }
        }
    }
    prompt
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
pub fn truncate_at_stops<'a>(text: &'a str, stops: &[String]) -> &'a str {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .unwrap_or(text.len());
    &text[..cut]
}

/// Builds a self-contained program from a task and a raw completion.
pub fn assemble_program(task: &EvalTask, completion: &str, stops: &[String]) -> String {
    let body = truncate_at_stops(completion, stops);
    match &task.tests {
        TaskTests::CheckHarness { harness } => {
            let entry = task.entry_point.as_deref().unwrap_or_default();
            format!("{}{}\n{}\ncheck({})\n", task.prompt_body, body, harness, entry)
        }
        TaskTests::Asserts { setup, lines } => {
            let mut program = String::with_capacity(body.len() + 256);
            program.push_str(body);
            program.push('\n');
            if let Some(setup) = setup {
                program.push_str(setup);
                program.push('\n');
            }
            program.push_str(&lines.join("\n"));
            program.push('\n');
            program
        }
    }
}

/// The task's reference solution assembled like a completion, without
/// truncation. `None` when the suite file carried no solution.
pub fn reference_program(task: &EvalTask) -> Option<String> {
    task.reference_solution
        .as_deref()
        .map(|solution| assemble_program(task, solution, &[]))
}
